// Scalar fields on a manifold together with the regularity metadata the
// envelope localization rules consume: a uniform bound N, a Lipschitz
// constant, a quadratic minorant f >= -(c/2)(1 + d(., anchor)^2) and the
// matching quadratic majorant used by the sup-convolution stage.
#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "renv/core.hpp"
#include "renv/manifold.hpp"

namespace renv {

// Quadratic envelope bound -(c0 + c2 d(., anchor)^2)/2 <= f (minorant) or
// f <= (c0 + c2 d^2)/2 (majorant). The symmetric case c0 == c2 == c is the
// usual (c/2)(1 + d^2) bound; keeping the two coefficients separate lets an
// inf-convolution tighten the quadratic part (c2 -> c2/(1 + c2 lambda))
// without touching the constant part, which keeps the sup-convolution stage
// localizable for larger mu.
struct QuadBound {
  double c0 = 0.0;
  double c2 = 0.0;
  Point anchor;

  static QuadBound symmetric(double c, Point anchor) { return {c, c, std::move(anchor)}; }
};

struct FieldMeta {
  std::optional<double> bound;          // |f| <= bound
  std::optional<double> lip;            // |f(x)-f(y)| <= lip d(x,y)
  std::optional<QuadBound> quad_minor;  // for inf-convolution localization
  std::optional<QuadBound> quad_major;  // for the sup-convolution stage
};

struct ScalarField {
  const Manifold* M = nullptr;
  std::string name;
  std::function<double(const Point&)> eval;
  FieldMeta meta;

  double operator()(const Point& p) const { return eval(p); }
};

// -- constructors ------------------------------------------------------------

inline ScalarField constant_field(const Manifold& M, double value) {
  ScalarField f;
  f.M = &M;
  f.name = "const";
  f.eval = [value](const Point&) { return value; };
  f.meta.bound = std::abs(value);
  f.meta.lip = 0.0;
  return f;
}

// w d(., x0)^2: unbounded, quadratically minorized trivially (it is >= 0,
// so the zero bound works) and majorized with c2 = 2w.
inline ScalarField dist2_field(const Manifold& M, const Point& x0, double weight = 1.0) {
  ScalarField f;
  f.M = &M;
  f.name = "dist2";
  f.eval = [&M, x0, weight](const Point& p) {
    double d = M.dist(x0, p);
    return weight * d * d;
  };
  f.meta.quad_minor = QuadBound{0.0, 0.0, x0};
  f.meta.quad_major = QuadBound{0.0, 2.0 * weight, x0};
  return f;
}

// d(., x0): 1-Lipschitz, unbounded; d <= (1 + d^2)/2.
inline ScalarField dist_field(const Manifold& M, const Point& x0) {
  ScalarField f;
  f.M = &M;
  f.name = "dist";
  f.eval = [&M, x0](const Point& p) { return M.dist(x0, p); };
  f.meta.lip = 1.0;
  f.meta.quad_minor = QuadBound{0.0, 0.0, x0};
  f.meta.quad_major = QuadBound::symmetric(1.0, x0);
  return f;
}

// min{cap, min_i d(., p_i)}: bounded by cap and 1-Lipschitz.
inline ScalarField truncated_min_field(const Manifold& M, std::vector<Point> centers,
                                       double cap) {
  ScalarField f;
  f.M = &M;
  f.name = "truncmin";
  f.eval = [&M, centers = std::move(centers), cap](const Point& p) {
    double best = cap;
    for (const Point& c : centers) best = std::min(best, M.dist(c, p));
    return best;
  };
  f.meta.bound = cap;
  f.meta.lip = 1.0;
  return f;
}

// Smooth bump height * b(d/r) with b(u) = exp(1 - 1/(1-u^2)) on [0,1), 0 outside.
// b has max |b'| = 2.1703570860518287 and b'' in [-4.1595, 21.067], so the
// field is Lipschitz with constant 2.17036 * height / r.
inline constexpr double kBumpLipFactor = 2.1703570860518287;

inline double bump_profile(double u) {
  if (u >= 1.0) return 0.0;
  return std::exp(1.0 - 1.0 / (1.0 - u * u));
}

inline ScalarField bump_field(const Manifold& M, const Point& center, double r,
                              double height = 1.0) {
  ScalarField f;
  f.M = &M;
  f.name = "bump";
  f.eval = [&M, center, r, height](const Point& p) {
    return height * bump_profile(M.dist(center, p) / r);
  };
  f.meta.bound = height;
  f.meta.lip = kBumpLipFactor * height / r;
  return f;
}

inline bool same_anchor(const ScalarField& f, const QuadBound& a, const QuadBound& b) {
  return f.M->dist(a.anchor, b.anchor) < 1e-12;
}

// a f + b g with the metadata algebra for the combinations the suites use.
inline ScalarField affine_combination(const ScalarField& f, double a, const ScalarField& g,
                                      double b) {
  ScalarField r;
  r.M = f.M;
  r.name = f.name + "+" + g.name;
  r.eval = [fe = f.eval, ge = g.eval, a, b](const Point& p) { return a * fe(p) + b * ge(p); };
  if (f.meta.bound && g.meta.bound)
    r.meta.bound = std::abs(a) * *f.meta.bound + std::abs(b) * *g.meta.bound;
  if (f.meta.lip && g.meta.lip) r.meta.lip = std::abs(a) * *f.meta.lip + std::abs(b) * *g.meta.lip;
  // Quadratic bounds survive adding a bounded term (shift the constant) when
  // the scalars are nonnegative.
  if (a >= 0 && f.meta.quad_minor && (b >= 0 ? g.meta.quad_minor : g.meta.quad_major)) {
    const QuadBound& qf = *f.meta.quad_minor;
    const QuadBound& qg = b >= 0 ? *g.meta.quad_minor : *g.meta.quad_major;
    if (same_anchor(f, qf, qg))
      r.meta.quad_minor =
          QuadBound{a * qf.c0 + std::abs(b) * qg.c0, a * qf.c2 + std::abs(b) * qg.c2, qf.anchor};
  }
  if (a >= 0 && f.meta.quad_major && (b >= 0 ? g.meta.quad_major : g.meta.quad_minor)) {
    const QuadBound& qf = *f.meta.quad_major;
    const QuadBound& qg = b >= 0 ? *g.meta.quad_major : *g.meta.quad_minor;
    if (same_anchor(f, qf, qg))
      r.meta.quad_major =
          QuadBound{a * qf.c0 + std::abs(b) * qg.c0, a * qf.c2 + std::abs(b) * qg.c2, qf.anchor};
  }
  // A bounded second term widens only the constant part:
  // f + g <= (c0 + c2 d^2)/2 + N = ((c0 + 2N) + c2 d^2)/2.
  if (a >= 0 && !r.meta.quad_major && f.meta.quad_major && g.meta.bound)
    r.meta.quad_major = QuadBound{a * f.meta.quad_major->c0 + 2.0 * std::abs(b) * *g.meta.bound,
                                  a * f.meta.quad_major->c2, f.meta.quad_major->anchor};
  if (a >= 0 && !r.meta.quad_minor && f.meta.quad_minor && g.meta.bound)
    r.meta.quad_minor = QuadBound{a * f.meta.quad_minor->c0 + 2.0 * std::abs(b) * *g.meta.bound,
                                  a * f.meta.quad_minor->c2, f.meta.quad_minor->anchor};
  return r;
}

inline ScalarField negate(const ScalarField& f) {
  ScalarField r;
  r.M = f.M;
  r.name = "-" + f.name;
  r.eval = [fe = f.eval](const Point& p) { return -fe(p); };
  r.meta.bound = f.meta.bound;
  r.meta.lip = f.meta.lip;
  // -f >= -(c/2)(1+d^2) iff f <= (c/2)(1+d^2): minorant and majorant swap.
  r.meta.quad_minor = f.meta.quad_major;
  r.meta.quad_major = f.meta.quad_minor;
  return r;
}

// Wraps an arbitrary evaluation rule (e.g. a computed envelope) with
// explicitly supplied metadata.
inline ScalarField wrap_field(const Manifold& M, std::string name,
                              std::function<double(const Point&)> eval, FieldMeta meta) {
  ScalarField f;
  f.M = &M;
  f.name = std::move(name);
  f.eval = std::move(eval);
  f.meta = meta;
  return f;
}

// -- library -----------------------------------------------------------------

// Named field construction for the CLI: ids dist2 | dist | truncmin | bump |
// const, each centered/anchored at the supplied base point.
inline ScalarField field_library(const std::string& id, const Manifold& M, const Point& base,
                                 double param = 0.0) {
  if (id == "dist2") return dist2_field(M, base);
  if (id == "dist") return dist_field(M, base);
  if (id == "truncmin") return truncated_min_field(M, {base}, param > 0 ? param : 2.0);
  if (id == "bump") return bump_field(M, base, param > 0 ? param : 0.35, 1.0);
  if (id == "const") return constant_field(M, param);
  throw DomainError("unknown field id: " + id);
}

}  // namespace renv
