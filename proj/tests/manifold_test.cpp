// Closed-form geometry checks for the model spaces: distances, geodesics,
// transports, differentials, and the chart helpers every other module leans on.
#include <gtest/gtest.h>

#include <cmath>

#include "renv/manifold.hpp"

namespace {

using namespace renv;

Point chart_offset(const Manifold& M, const Point& x0, const Vec& u) {
  return M.chart_point(x0, M.frame(x0), u);
}

// ---------------------------------------------------------------------------
// Euclidean

TEST(Euclidean, DistanceIsCoordinateNorm) {
  Euclidean E(3);
  Point p = E.point(Vec{1.0, -2.0, 0.5});
  Point q = E.point(Vec{-0.5, 1.0, 2.0});
  EXPECT_NEAR(E.dist(p, q), enorm(p.x - q.x), 1e-15);
  EXPECT_DOUBLE_EQ(E.dist(p, p), 0.0);
}

TEST(Euclidean, ExpLogRoundTrip) {
  Euclidean E(2);
  Point x = E.point(Vec{0.3, -0.7});
  Point y = E.point(Vec{-1.2, 2.1});
  Tangent v = E.log(x, y);
  EXPECT_NEAR(v.norm, E.dist(x, y), 1e-15);
  Point back = E.exp(x, v);
  EXPECT_NEAR(enorm(back.x - y.x), 0.0, 1e-15);
}

TEST(Euclidean, TransportAndDexpAreIdentity) {
  Euclidean E(2);
  Point x = E.point(Vec{0.0, 0.0});
  Point y = E.point(Vec{3.0, 4.0});
  Tangent h = E.tangent(x, Vec{0.6, -0.8});
  Tangent moved = E.transport(x, y, h);
  EXPECT_NEAR(enorm(moved.v - h.v), 0.0, 1e-15);
  Tangent d = E.dexp(x, E.log(x, y), h);
  EXPECT_NEAR(enorm(d.v - h.v), 0.0, 1e-15);
  EXPECT_EQ(E.curvature_bound(), 0.0);
}

// ---------------------------------------------------------------------------
// Sphere

TEST(Sphere, PoleToEquatorIsQuarterCircle) {
  Sphere S(2, 1.0);
  Point north = S.point(Vec{0.0, 0.0, 1.0});
  Point equator = S.point(Vec{1.0, 0.0, 0.0});
  EXPECT_NEAR(S.dist(north, equator), M_PI / 2.0, 1e-12);
}

TEST(Sphere, CurvatureRescalesDistances) {
  // K = 4 halves the radius, so the same pair of rays subtends half the arc.
  Sphere S1(2, 1.0), S4(2, 4.0);
  Point a1 = S1.point(Vec{0.0, 0.0, 1.0});
  Point b1 = S1.point(Vec{1.0, 0.0, 0.0});
  Point a4 = S4.point(Vec{0.0, 0.0, 0.5});
  Point b4 = S4.point(Vec{0.5, 0.0, 0.0});
  EXPECT_NEAR(S4.dist(a4, b4), 0.5 * S1.dist(a1, b1), 1e-12);
  EXPECT_EQ(S4.curvature_bound(), 4.0);
  EXPECT_NEAR(S4.injectivity_radius(), M_PI / 2.0, 1e-12);
}

TEST(Sphere, ExpLogRoundTripAwayFromCutLocus) {
  Sphere S(2, 1.0);
  Point x = S.point(Vec{0.0, 0.0, 1.0});
  for (double t : {0.1, 0.8, 1.7, 2.9}) {
    Point y = chart_offset(S, x, Vec{t * 0.6, t * 0.8});
    Tangent v = S.log(x, y);
    EXPECT_NEAR(v.norm, t, 1e-10) << "t=" << t;
    Point back = S.exp(x, v);
    EXPECT_NEAR(S.dist(back, y), 0.0, 1e-10) << "t=" << t;
  }
}

TEST(Sphere, LogBeyondCutLocusThrows) {
  Sphere S(2, 1.0);
  Point north = S.point(Vec{0.0, 0.0, 1.0});
  Point south = S.point(Vec{0.0, 0.0, -1.0});
  EXPECT_THROW(S.log(north, south), CutLocusExceeded);
}

TEST(Sphere, TransportIsALinearIsometry) {
  Sphere S(2, 1.0);
  Point x = S.point(Vec{0.0, 0.0, 1.0});
  Point y = chart_offset(S, x, Vec{0.9, 0.4});
  std::vector<Tangent> E = S.frame(x);
  Tangent a = S.transport(x, y, E[0]);
  Tangent b = S.transport(x, y, E[1]);
  EXPECT_NEAR(a.norm, 1.0, 1e-12);
  EXPECT_NEAR(b.norm, 1.0, 1e-12);
  EXPECT_NEAR(S.metric_dot(y, a.v, b.v), 0.0, 1e-12);
}

TEST(Sphere, GeodesicInterpolatesDistanceLinearly) {
  Sphere S(2, 1.0);
  Point x = S.point(Vec{0.0, 0.0, 1.0});
  Point y = chart_offset(S, x, Vec{1.1, -0.7});
  double d = S.dist(x, y);
  Tangent v = S.log(x, y);
  for (double t : {0.25, 0.5, 0.75}) {
    Tangent tv = v;
    tv.v *= t;
    tv.norm *= t;
    Point m = S.exp(x, tv);
    EXPECT_NEAR(S.dist(x, m), t * d, 1e-10);
    EXPECT_NEAR(S.dist(m, y), (1.0 - t) * d, 1e-10);
  }
}

TEST(Sphere, MidpointHalvesBothLegs) {
  Sphere S(2, 1.0);
  Point x = S.point(Vec{0.0, 0.0, 1.0});
  Point y = chart_offset(S, x, Vec{0.8, 0.5});
  Point m = S.midpoint(x, y);
  double d = S.dist(x, y);
  EXPECT_NEAR(S.dist(x, m), d / 2.0, 1e-10);
  EXPECT_NEAR(S.dist(m, y), d / 2.0, 1e-10);
}

// On the unit sphere dexp shrinks orthogonal directions by sin(t)/t and
// dinvexp undoes it; the radial direction is untouched.
TEST(Sphere, DexpMatchesJacobiFactors) {
  Sphere S(2, 1.0);
  Point x = S.point(Vec{0.0, 0.0, 1.0});
  std::vector<Tangent> E = S.frame(x);
  double t = 0.9;
  Tangent v = E[0];
  v.v *= t;
  v.norm = t;
  Point y = S.exp(x, v);

  Tangent ortho = S.dexp(x, v, E[1]);
  EXPECT_NEAR(ortho.norm, std::sin(t) / t, 1e-12);
  Tangent radial = S.dexp(x, v, E[0]);
  EXPECT_NEAR(radial.norm, 1.0, 1e-12);

  // dinvexp(x, y, .) inverts dexp at v = log(x, y).
  Tangent back = S.dinvexp(x, y, ortho);
  EXPECT_NEAR(enorm(back.v - E[1].v), 0.0, 1e-10);
}

TEST(Sphere, ValidateRejectsOffSpherePoints) {
  Sphere S(2, 1.0);
  EXPECT_THROW(S.point(Vec{0.0, 0.0, 1.5}), DomainError);
  EXPECT_NO_THROW(S.point(Vec{0.0, 1.0, 0.0}));
}

// ---------------------------------------------------------------------------
// Hyperbolic

TEST(Hyperbolic, ChartDistanceIsExact) {
  Hyperbolic H(2, -1.0);
  Point x0 = H.point(Vec{0.0, 0.0, 1.0});
  for (double t : {0.3, 1.0, 4.0, 10.0}) {
    Point y = chart_offset(H, x0, Vec{t, 0.0});
    EXPECT_NEAR(H.dist(x0, y), t, 1e-9 * std::max(1.0, t)) << "t=" << t;
  }
}

TEST(Hyperbolic, ExpLogRoundTripFarOut) {
  Hyperbolic H(2, -1.0);
  Point x = H.point(Vec{0.0, 0.0, 1.0});
  for (double t : {0.5, 2.0, 6.0, 10.0}) {
    Point y = chart_offset(H, x, Vec{t * 0.28, -t * 0.96});
    Tangent v = H.log(x, y);
    EXPECT_NEAR(v.norm, t, 1e-8 * std::max(1.0, t));
    Point back = H.exp(x, v);
    EXPECT_NEAR(H.dist(back, y), 0.0, 1e-8 * std::max(1.0, t));
  }
}

TEST(Hyperbolic, PointsStayOnTheSheet) {
  Hyperbolic H(2, -1.0);
  Point x = H.point(Vec{0.0, 0.0, 1.0});
  Point far = chart_offset(H, x, Vec{9.0, 5.0});
  // Minkowski constraint <p,p> = -1, checked relative to the coordinate size.
  double m = far.x[0] * far.x[0] + far.x[1] * far.x[1] - far.x[2] * far.x[2];
  double scale = std::max(1.0, edot(far.x, far.x));
  EXPECT_LT(std::abs(m + 1.0), 1e-12 * scale);
  EXPECT_GT(far.x[2], 0.0);
  EXPECT_NO_THROW(H.validate(far));
}

TEST(Hyperbolic, ValidateRejectsOtherSheetAndOffSheet) {
  Hyperbolic H(2, -1.0);
  EXPECT_THROW(H.point(Vec{0.0, 0.0, -1.0}), DomainError);  // lower sheet
  EXPECT_THROW(H.point(Vec{0.5, 0.0, 1.0}), DomainError);   // off the quadric
}

TEST(Hyperbolic, TransportPreservesNormsAndAngles) {
  Hyperbolic H(2, -1.0);
  Point x = H.point(Vec{0.0, 0.0, 1.0});
  Point y = chart_offset(H, x, Vec{1.3, 2.1});
  std::vector<Tangent> E = H.frame(x);
  Tangent a = H.transport(x, y, E[0]);
  Tangent b = H.transport(x, y, E[1]);
  EXPECT_NEAR(a.norm, 1.0, 1e-10);
  EXPECT_NEAR(b.norm, 1.0, 1e-10);
  EXPECT_NEAR(H.metric_dot(y, a.v, b.v), 0.0, 1e-10);
}

TEST(Hyperbolic, DexpMatchesJacobiFactors) {
  Hyperbolic H(2, -1.0);
  Point x = H.point(Vec{0.0, 0.0, 1.0});
  std::vector<Tangent> E = H.frame(x);
  double t = 1.4;
  Tangent v = E[0];
  v.v *= t;
  v.norm = t;
  Point y = H.exp(x, v);
  Tangent ortho = H.dexp(x, v, E[1]);
  EXPECT_NEAR(ortho.norm, std::sinh(t) / t, 1e-10);
  Tangent back = H.dinvexp(x, y, ortho);
  EXPECT_NEAR(enorm(back.v - E[1].v), 0.0, 1e-9);
}

// The usable chart shrinks as the base point moves out: double precision
// cannot represent the quadric past coordinate magnitudes ~ e^16, so the
// working radius at the apex is 16 and decays with the base point's distance
// from it.
TEST(Hyperbolic, ChartRadiusShrinksWithBaseDistance) {
  Hyperbolic H(2, -1.0);
  Point apex = H.point(Vec{0.0, 0.0, 1.0});
  EXPECT_NEAR(H.chart_radius(apex), 16.0, 1e-9);
  Point mid = chart_offset(H, apex, Vec{10.0, 0.0});
  EXPECT_NEAR(H.chart_radius(mid), 6.0, 1e-6);
  EXPECT_GE(H.chart_radius(chart_offset(H, apex, Vec{15.9, 0.0})), 0.0);
}

TEST(Hyperbolic, DistanceStaysAccurateInsideWorkingRadius) {
  // Chords between moderately separated far points keep relative accuracy:
  // d(x0->a) + d(a->b) == d(x0->b) along a common ray.
  Hyperbolic H(2, -1.0);
  Point x0 = H.point(Vec{0.0, 0.0, 1.0});
  Point a = chart_offset(H, x0, Vec{6.0, 0.0});
  Point b = chart_offset(H, x0, Vec{11.0, 0.0});
  EXPECT_NEAR(H.dist(a, b), 5.0, 1e-7);
}

// ---------------------------------------------------------------------------
// Products

TEST(Product, DistanceAddsInSquares) {
  Sphere S(2, 1.0);
  Hyperbolic H(2, -1.0);
  Product P(&S, &H);
  EXPECT_EQ(P.dim(), 4);
  EXPECT_EQ(P.ambient_dim(), 6);

  Point xs = S.point(Vec{0.0, 0.0, 1.0});
  Point xh = H.point(Vec{0.0, 0.0, 1.0});
  Point ys = chart_offset(S, xs, Vec{0.6, 0.2});
  Point yh = chart_offset(H, xh, Vec{-0.4, 1.1});
  Point x = P.join(xs, xh), y = P.join(ys, yh);

  double ds = S.dist(xs, ys), dh = H.dist(xh, yh);
  EXPECT_NEAR(P.dist(x, y), std::sqrt(ds * ds + dh * dh), 1e-10);
}

TEST(Product, ExpLogFactorwise) {
  Sphere S(2, 1.0);
  Product P(&S, &S);
  Point a = S.point(Vec{0.0, 0.0, 1.0});
  Point b = chart_offset(S, a, Vec{0.5, -0.3});
  Point x = P.join(a, a), y = P.join(b, a);
  Tangent v = P.log(x, y);
  Point back = P.exp(x, v);
  EXPECT_NEAR(P.dist(back, y), 0.0, 1e-10);
  auto [fa, fb] = P.split_point(back);
  EXPECT_NEAR(S.dist(fa, b), 0.0, 1e-10);
  EXPECT_NEAR(S.dist(fb, a), 0.0, 1e-10);
}

TEST(Product, BoundsAreTheWorstFactor) {
  Sphere S(2, 4.0);
  Hyperbolic H(2, -1.0);
  Product P(&S, &H);
  EXPECT_EQ(P.curvature_bound(), 4.0);
  EXPECT_NEAR(P.injectivity_radius(), S.injectivity_radius(), 1e-12);
  double K = 0.0;
  EXPECT_FALSE(P.constant_curvature(&K));
}

// ---------------------------------------------------------------------------
// Shared plumbing

TEST(Manifold, LogNormEqualsDistanceEverywhere) {
  Sphere S(2, 1.0);
  Hyperbolic H(2, -1.0);
  Euclidean E(2);
  const Manifold* Ms[] = {&S, &H, &E};
  Vec bases[] = {Vec{0.0, 0.0, 1.0}, Vec{0.0, 0.0, 1.0}, Vec{0.0, 0.0}};
  for (int i = 0; i < 3; ++i) {
    Point x0 = Ms[i]->point(slice(bases[i], 0, Ms[i]->ambient_dim()));
    Point y = chart_offset(*Ms[i], x0, Vec{0.7, -0.2});
    EXPECT_NEAR(Ms[i]->log(x0, y).norm, Ms[i]->dist(x0, y), 1e-10) << Ms[i]->name();
  }
}

TEST(Manifold, FramesAreOrthonormal) {
  Sphere S(2, 1.0);
  Point x = chart_offset(S, S.point(Vec{0.0, 0.0, 1.0}), Vec{0.4, 1.0});
  std::vector<Tangent> E = S.frame(x);
  ASSERT_EQ(E.size(), 2u);
  EXPECT_NEAR(S.metric_dot(x, E[0].v, E[0].v), 1.0, 1e-12);
  EXPECT_NEAR(S.metric_dot(x, E[1].v, E[1].v), 1.0, 1e-12);
  EXPECT_NEAR(S.metric_dot(x, E[0].v, E[1].v), 0.0, 1e-12);
}

TEST(Manifold, TriangleInequalityFuzz) {
  Hyperbolic H(2, -1.0);
  Point x0 = H.point(Vec{0.0, 0.0, 1.0});
  Rng rng(kDefaultSeed);
  for (int i = 0; i < 200; ++i) {
    auto sample = [&] {
      return chart_offset(H, x0, Vec{rng.uniform(-3.0, 3.0), rng.uniform(-3.0, 3.0)});
    };
    Point a = sample(), b = sample(), c = sample();
    EXPECT_LE(H.dist(a, c), H.dist(a, b) + H.dist(b, c) + 1e-9);
    EXPECT_NEAR(H.dist(a, b), H.dist(b, a), 1e-10);
  }
}

TEST(Rng, SplitmixStreamsAreDeterministic) {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next_u64(), b.next_u64());
  Rng c(kDefaultSeed), d(kDefaultSeed);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(c.uniform(), d.uniform());
}

}  // namespace
