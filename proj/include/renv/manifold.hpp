// Closed-form geometry for the constant-curvature model spaces and their
// products: exponential map, logarithm, distance, parallel transport, the
// differential of exp (via constant-curvature Jacobi fields), orthonormal
// frames, and curvature/radius metadata.
//
// Representation choices:
//  * Sphere of curvature K > 0: embedded in R^{n+1} with radius 1/sqrt(K).
//  * Hyperbolic of curvature K < 0: upper hyperboloid sheet in Minkowski
//    space R^{n,1} (last coordinate timelike), <p,p> = -1/|K|.
//  * Euclidean: Cartesian coordinates.
//  * Product: concatenated coordinates, Pythagorean distance.
// All five primitives have closed forms on these models.
#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "renv/core.hpp"

namespace renv {

struct Manifold;

struct Point {
  const Manifold* M = nullptr;
  Vec x;
};

struct Tangent {
  Point base;
  Vec v;              // components in the base point's ambient/chart coordinates
  double norm = 0.0;  // cached Riemannian norm
};

// Abstract base: all operations are pure and throw on precondition
// violations (CutLocusExceeded, DomainError) rather than clamping.
struct Manifold {
  virtual ~Manifold() = default;

  virtual std::string name() const = 0;
  virtual int dim() const = 0;          // intrinsic dimension
  virtual int ambient_dim() const = 0;  // number of stored coordinates

  // Metadata: sup |K| over the working region, injectivity and convexity
  // radii (kInf when infinite).
  virtual double curvature_bound() const = 0;
  virtual double injectivity_radius() const = 0;
  virtual double convexity_radius() const = 0;

  // Constant sectional curvature, when the space has one.
  virtual bool constant_curvature(double* K) const {
    (void)K;
    return false;
  }

  virtual void validate(const Point& p) const = 0;
  virtual double metric_dot(const Point& p, const Vec& u, const Vec& w) const = 0;

  virtual Point exp(const Point& x, const Tangent& v) const = 0;
  virtual Tangent log(const Point& x, const Point& y) const = 0;
  virtual double dist(const Point& x, const Point& y) const = 0;

  // Parallel transport of h (based at x) along the minimizing geodesic to y.
  virtual Tangent transport(const Point& x, const Point& y, const Tangent& h) const = 0;

  // Differential of exp_x at v applied to h, a tangent at exp_x(v).
  virtual Tangent dexp(const Point& x, const Tangent& v, const Tangent& h) const = 0;

  // Differential of log_x at y applied to h in T_yM, a tangent at x.
  virtual Tangent dinvexp(const Point& x, const Point& y, const Tangent& h) const = 0;

  // Deterministic orthonormal basis of T_xM.
  virtual std::vector<Tangent> frame(const Point& x) const = 0;

  // Largest radius around x within which the exponential chart may be
  // searched: inside the injectivity radius and, for integrated geometries,
  // inside the working region.
  virtual double chart_radius(const Point& x) const {
    (void)x;
    double i = injectivity_radius();
    return i >= kInf ? kInf : i - kCutLocusMargin;
  }

  // -- non-virtual helpers ---------------------------------------------------

  double metric_norm(const Point& p, const Vec& u) const {
    return std::sqrt(std::max(0.0, metric_dot(p, u, u)));
  }

  Tangent tangent(const Point& x, const Vec& comps) const {
    Tangent t;
    t.base = x;
    t.v = comps;
    t.norm = metric_norm(x, comps);
    return t;
  }

  Point point(const Vec& coords) const {
    Point p;
    p.M = this;
    p.x = coords;
    validate(p);
    return p;
  }

  // Chart point exp_x(sum_i u[i] E_i) for a cached frame E.
  Point chart_point(const Point& x, const std::vector<Tangent>& E, const Vec& u) const {
    Vec comps = zeros(ambient_dim());
    for (int i = 0; i < u.size(); ++i)
      for (int k = 0; k < comps.size(); ++k) comps[k] += u[i] * E[i].v[k];
    return exp(x, tangent(x, comps));
  }

  Point midpoint(const Point& x, const Point& y) const {
    Tangent l = log(x, y);
    l.v *= 0.5;
    l.norm *= 0.5;
    return exp(x, l);
  }

  // Geodesic point x ->(fraction t) y.
  Point geodesic_point(const Point& x, const Point& y, double t) const {
    Tangent l = log(x, y);
    l.v *= t;
    l.norm *= t;
    return exp(x, l);
  }
};

// Shared Jacobi-field helpers (defined after the concrete spaces below).
template <class M, class Factor>
Tangent jacobi_push(const M& m, const Point& x, const Tangent& v, const Tangent& h,
                    Factor factor);
template <class M, class Factor>
Tangent jacobi_pull(const M& m, const Point& x, const Point& y, const Tangent& h,
                    Factor factor);
template <class M, class Project>
std::vector<Tangent> seeded_frame(const M& m, const Point& x, Project project);

// ---------------------------------------------------------------------------

class Euclidean : public Manifold {
 public:
  explicit Euclidean(int n) : n_(n) {}

  std::string name() const override { return "euclidean"; }
  int dim() const override { return n_; }
  int ambient_dim() const override { return n_; }
  double curvature_bound() const override { return 0.0; }
  double injectivity_radius() const override { return kInf; }
  double convexity_radius() const override { return kInf; }
  bool constant_curvature(double* K) const override {
    if (K) *K = 0.0;
    return true;
  }

  void validate(const Point& p) const override {
    if (p.x.size() != n_) throw DomainError("euclidean point has wrong dimension");
  }

  double metric_dot(const Point&, const Vec& u, const Vec& w) const override {
    return edot(u, w);
  }

  Point exp(const Point& x, const Tangent& v) const override {
    Point r = x;
    r.x += v.v;
    return r;
  }

  Tangent log(const Point& x, const Point& y) const override {
    return tangent(x, y.x - x.x);
  }

  double dist(const Point& x, const Point& y) const override { return enorm(y.x - x.x); }

  Tangent transport(const Point&, const Point& y, const Tangent& h) const override {
    Tangent r = h;
    r.base = y;
    return r;
  }

  Tangent dexp(const Point& x, const Tangent& v, const Tangent& h) const override {
    Point y = exp(x, v);
    Tangent r = h;
    r.base = y;
    return r;
  }

  Tangent dinvexp(const Point& x, const Point&, const Tangent& h) const override {
    Tangent r = h;
    r.base = x;
    return r;
  }

  std::vector<Tangent> frame(const Point& x) const override {
    std::vector<Tangent> E;
    for (int i = 0; i < n_; ++i) {
      Vec u = zeros(n_);
      u[i] = 1.0;
      E.push_back(tangent(x, u));
    }
    return E;
  }

 private:
  int n_;
};

// ---------------------------------------------------------------------------

class Sphere : public Manifold {
 public:
  // Dimension n sphere of constant curvature K > 0, embedded in R^{n+1}.
  Sphere(int n, double K) : n_(n), K_(K), rho_(1.0 / std::sqrt(K)) {
    if (!(K > 0)) throw DomainError("sphere requires K > 0");
  }

  std::string name() const override { return "sphere"; }
  int dim() const override { return n_; }
  int ambient_dim() const override { return n_ + 1; }
  double curvature_bound() const override { return K_; }
  double injectivity_radius() const override { return kPi * rho_; }
  double convexity_radius() const override { return 0.5 * kPi * rho_; }
  bool constant_curvature(double* K) const override {
    if (K) *K = K_;
    return true;
  }

  void validate(const Point& p) const override {
    if (p.x.size() != n_ + 1) throw DomainError("sphere point has wrong dimension");
    double tol = 1e-12 * std::max(1.0, rho_ * rho_);
    if (std::abs(edot(p.x, p.x) - rho_ * rho_) > tol)
      throw DomainError("point is not on the sphere |<p,p>| = 1/K");
  }

  double metric_dot(const Point&, const Vec& u, const Vec& w) const override {
    return edot(u, w);
  }

  Point exp(const Point& x, const Tangent& v) const override {
    double nv = v.norm;
    if (nv >= injectivity_radius() - kCutLocusMargin)
      throw CutLocusExceeded("exp: |v| reaches the sphere cut locus");
    Point r;
    r.M = this;
    if (nv == 0.0) {
      r.x = x.x;
      return r;
    }
    double th = nv / rho_;
    Vec u = (1.0 / nv) * v.v;
    r.x = std::cos(th) * x.x + (rho_ * std::sin(th)) * u;
    renormalize(r.x);
    return r;
  }

  Tangent log(const Point& x, const Point& y) const override {
    double d = dist(x, y);
    if (d >= injectivity_radius() - kCutLocusMargin)
      throw CutLocusExceeded("log: points are antipodal within the cut-locus guard");
    double th = d / rho_;
    Tangent t;
    t.base = x;
    if (th < 1e-9) {
      // First order: y - x is already tangent to this accuracy.
      t.v = project(x.x, y.x - x.x);
      t.norm = d;
      rescale(t.v, d);
      return t;
    }
    Vec dir = y.x - std::cos(th) * x.x;  // length rho*sin(th), tangent at x
    t.v = (d / (rho_ * std::sin(th))) * dir;
    t.norm = d;
    return t;
  }

  double dist(const Point& x, const Point& y) const override {
    double c = edot(x.x, y.x) / (rho_ * rho_);
    double th;
    if (c >= 0.0) {
      double chord = enorm(y.x - x.x);
      th = 2.0 * std::asin(std::min(1.0, chord / (2.0 * rho_)));
    } else {
      th = std::acos(std::max(-1.0, c));
    }
    return rho_ * th;
  }

  Tangent transport(const Point& x, const Point& y, const Tangent& h) const override {
    double d = dist(x, y);
    if (d >= injectivity_radius() - kCutLocusMargin)
      throw CutLocusExceeded("transport: target beyond the cut-locus guard");
    double cth = std::cos(d / rho_);
    Vec r = h.v - (edot(y.x, h.v) / (rho_ * rho_ * (1.0 + cth))) * (x.x + y.x);
    Tangent t;
    t.base = y;
    t.v = project(y.x, r);
    t.norm = h.norm;
    return t;
  }

  Tangent dexp(const Point& x, const Tangent& v, const Tangent& h) const override {
    return jacobi_push(*this, x, v, h,
                       [](double th) { return th == 0.0 ? 1.0 : std::sin(th) / th; });
  }

  Tangent dinvexp(const Point& x, const Point& y, const Tangent& h) const override {
    return jacobi_pull(*this, x, y, h,
                       [](double th) { return th == 0.0 ? 1.0 : th / std::sin(th); });
  }

  std::vector<Tangent> frame(const Point& x) const override {
    return seeded_frame(*this, x, [this](const Vec& base, const Vec& u) {
      return project(base, u);
    });
  }

  // Projection onto the tangent space at base (Euclidean orthogonality).
  Vec project(const Vec& base, const Vec& u) const {
    return u - (edot(base, u) / (rho_ * rho_)) * base;
  }

 private:
  void renormalize(Vec& p) const {
    double s = rho_ / enorm(p);
    p *= s;
  }
  static void rescale(Vec& u, double target) {
    double n = enorm(u);
    if (n > 0) u *= target / n;
  }

  int n_;
  double K_, rho_;
  static constexpr double kPi = 3.14159265358979323846;
};

// ---------------------------------------------------------------------------

class Hyperbolic : public Manifold {
 public:
  // Dimension n hyperbolic space of constant curvature K < 0, on the upper
  // hyperboloid sheet of R^{n,1}.
  Hyperbolic(int n, double K) : n_(n), K_(K), rho_(1.0 / std::sqrt(-K)) {
    if (!(K < 0)) throw DomainError("hyperbolic requires K < 0");
  }

  std::string name() const override { return "hyperbolic"; }
  int dim() const override { return n_; }
  int ambient_dim() const override { return n_ + 1; }
  double curvature_bound() const override { return -K_; }
  double injectivity_radius() const override { return kInf; }
  double convexity_radius() const override { return kInf; }
  bool constant_curvature(double* K) const override {
    if (K) *K = K_;
    return true;
  }

  // Minkowski bilinear form (last coordinate timelike).
  double mdot(const Vec& u, const Vec& w) const {
    double s = 0;
    for (int i = 0; i + 1 < u.size(); ++i) s += u[i] * w[i];
    return s - u[u.size() - 1] * w[w.size() - 1];
  }

  void validate(const Point& p) const override {
    if (p.x.size() != n_ + 1) throw DomainError("hyperboloid point has wrong dimension");
    // The constraint residual is a cancellation of squares, so the check is
    // honest only relative to the coordinate scale.
    double scale = std::max(rho_ * rho_, edot(p.x, p.x));
    if (std::abs(mdot(p.x, p.x) + rho_ * rho_) > 1e-12 * scale || p.x[n_] <= 0)
      throw DomainError("point is not on the upper hyperboloid sheet");
  }

  double metric_dot(const Point&, const Vec& u, const Vec& w) const override {
    return mdot(u, w);
  }

  Point exp(const Point& x, const Tangent& v) const override {
    Point r;
    r.M = this;
    double nv = v.norm;
    if (nv == 0.0) {
      r.x = x.x;
      return r;
    }
    double th = nv / rho_;
    Vec u = (1.0 / nv) * v.v;
    r.x = std::cosh(th) * x.x + (rho_ * std::sinh(th)) * u;
    renormalize(r.x);
    return r;
  }

  Tangent log(const Point& x, const Point& y) const override {
    double d = dist(x, y);
    double th = d / rho_;
    Tangent t;
    t.base = x;
    if (th < 1e-9) {
      t.v = project(x.x, y.x - x.x);
      t.norm = d;
      double n = std::sqrt(std::max(0.0, mdot(t.v, t.v)));
      if (n > 0) t.v *= d / n;
      return t;
    }
    Vec dir = y.x - std::cosh(th) * x.x;
    t.v = (d / (rho_ * std::sinh(th))) * dir;
    t.norm = d;
    return t;
  }

  double dist(const Point& x, const Point& y) const override {
    // Chord form: <x-y, x-y>_M = 2 rho^2 (cosh(theta) - 1), stable near 0.
    Vec diff = y.x - x.x;
    double q = std::max(0.0, mdot(diff, diff));
    return rho_ * 2.0 * std::asinh(std::sqrt(q) / (2.0 * rho_));
  }

  Tangent transport(const Point& x, const Point& y, const Tangent& h) const override {
    double th = dist(x, y) / rho_;
    double cth = std::cosh(th);
    Vec r = h.v + (mdot(y.x, h.v) / (rho_ * rho_ * (1.0 + cth))) * (x.x + y.x);
    Tangent t;
    t.base = y;
    t.v = project(y.x, r);
    t.norm = h.norm;
    return t;
  }

  Tangent dexp(const Point& x, const Tangent& v, const Tangent& h) const override {
    return jacobi_push(*this, x, v, h, [](double th) {
      return th == 0.0 ? 1.0 : std::sinh(th) / th;
    });
  }

  Tangent dinvexp(const Point& x, const Point& y, const Tangent& h) const override {
    return jacobi_pull(*this, x, y, h, [](double th) {
      return th == 0.0 ? 1.0 : th / std::sinh(th);
    });
  }

  std::vector<Tangent> frame(const Point& x) const override {
    return seeded_frame(*this, x, [this](const Vec& base, const Vec& u) {
      return project(base, u);
    });
  }

  // Minkowski-orthogonal projection onto the tangent space at base.
  Vec project(const Vec& base, const Vec& u) const {
    return u + (mdot(base, u) / (rho_ * rho_)) * base;
  }

  // Searches stay inside the zone the coordinates can represent: components
  // grow like e^theta, and past theta ~ 16 the Minkowski cancellations behind
  // dist and exp have no significant bits left in doubles.
  double chart_radius(const Point& p) const override {
    double sn = 0.0;
    for (int i = 0; i < n_; ++i) sn += p.x[i] * p.x[i];
    double theta = std::asinh(std::sqrt(sn) / rho_);
    return std::max(0.0, rho_ * (16.0 - theta));
  }

 private:
  void renormalize(Vec& p) const {
    // Project along the time axis: recomputing the timelike coordinate from
    // the spacelike ones is cancellation-free at every scale, whereas
    // rescaling by the quadratic form divides by noise once coordinates pass
    // ~1e8 (and can hand back NaN).
    double s = 0.0;
    for (int i = 0; i + 1 < p.size(); ++i) s += p[i] * p[i];
    p[p.size() - 1] = std::sqrt(rho_ * rho_ + s);
  }

  int n_;
  double K_, rho_;
};

// ---------------------------------------------------------------------------
// Shared Jacobi-field helpers.  On constant curvature the differential of
// exp_x(v) acts as parallel transport on the radial component of h and as
// transport scaled by sin(theta)/theta (resp. sinh) on the orthogonal one;
// the differential of the inverse applies the reciprocal factors.

template <class M, class Factor>
Tangent jacobi_push(const M& m, const Point& x, const Tangent& v, const Tangent& h,
                    Factor factor) {
  Point y = m.exp(x, v);
  if (v.norm == 0.0) {
    Tangent r = h;
    r.base = y;
    return r;
  }
  double th = v.norm * std::sqrt(m.curvature_bound());
  Vec u = (1.0 / v.norm) * v.v;
  double hr = m.metric_dot(x, h.v, u);
  Vec perp = h.v - hr * u;
  Vec total = hr * u + factor(th) * perp;
  return m.transport(x, y, m.tangent(x, total));
}

template <class M, class Factor>
Tangent jacobi_pull(const M& m, const Point& x, const Point& y, const Tangent& h,
                    Factor factor) {
  Tangent back = m.transport(y, x, h);
  double d = m.dist(x, y);
  if (d == 0.0) return back;
  double th = d * std::sqrt(m.curvature_bound());
  Tangent l = m.log(x, y);
  Vec u = (1.0 / d) * l.v;
  double hr = m.metric_dot(x, back.v, u);
  Vec perp = back.v - hr * u;
  return m.tangent(x, hr * u + factor(th) * perp);
}

// Deterministic frame: metric Gram-Schmidt over the projected ambient
// seed basis e_1, e_2, ... keeping the first dim() independent directions.
template <class M, class Project>
std::vector<Tangent> seeded_frame(const M& m, const Point& x, Project project) {
  std::vector<Tangent> E;
  int need = m.dim();
  for (int i = 0; i < m.ambient_dim() && static_cast<int>(E.size()) < need; ++i) {
    Vec seed = zeros(m.ambient_dim());
    seed[i] = 1.0;
    Vec u = project(x.x, seed);
    for (const Tangent& e : E) u -= m.metric_dot(x, u, e.v) * e.v;
    double n = m.metric_norm(x, u);
    if (n < 1e-8) continue;
    E.push_back(m.tangent(x, (1.0 / n) * u));
  }
  return E;
}

// ---------------------------------------------------------------------------

// Product M1 x M2 with the product metric; coordinates are concatenated and
// every primitive acts componentwise (distance combines Pythagoras-style).
// Factors are referenced, not owned.
class Product : public Manifold {
 public:
  Product(const Manifold* a, const Manifold* b) : a_(a), b_(b) {}

  std::string name() const override { return a_->name() + "x" + b_->name(); }
  int dim() const override { return a_->dim() + b_->dim(); }
  int ambient_dim() const override { return a_->ambient_dim() + b_->ambient_dim(); }
  double curvature_bound() const override {
    return std::max(a_->curvature_bound(), b_->curvature_bound());
  }
  double injectivity_radius() const override {
    return std::min(a_->injectivity_radius(), b_->injectivity_radius());
  }
  double convexity_radius() const override {
    return std::min(a_->convexity_radius(), b_->convexity_radius());
  }

  void validate(const Point& p) const override {
    split_point(p);  // throws if either half is invalid
  }

  double metric_dot(const Point& p, const Vec& u, const Vec& w) const override {
    auto [pa, pb] = split_point(p);
    int na = a_->ambient_dim();
    return a_->metric_dot(pa, slice(u, 0, na), slice(w, 0, na)) +
           b_->metric_dot(pb, slice(u, na, b_->ambient_dim()), slice(w, na, b_->ambient_dim()));
  }

  Point exp(const Point& x, const Tangent& v) const override {
    auto [xa, xb] = split_point(x);
    int na = a_->ambient_dim();
    Point ra = a_->exp(xa, a_->tangent(xa, slice(v.v, 0, na)));
    Point rb = b_->exp(xb, b_->tangent(xb, slice(v.v, na, b_->ambient_dim())));
    Point r;
    r.M = this;
    r.x = concat(ra.x, rb.x);
    return r;
  }

  Tangent log(const Point& x, const Point& y) const override {
    auto [xa, xb] = split_point(x);
    auto [ya, yb] = split_point(y);
    Tangent la = a_->log(xa, ya), lb = b_->log(xb, yb);
    Tangent t;
    t.base = x;
    t.v = concat(la.v, lb.v);
    t.norm = std::hypot(la.norm, lb.norm);
    return t;
  }

  double dist(const Point& x, const Point& y) const override {
    auto [xa, xb] = split_point(x);
    auto [ya, yb] = split_point(y);
    return std::hypot(a_->dist(xa, ya), b_->dist(xb, yb));
  }

  Tangent transport(const Point& x, const Point& y, const Tangent& h) const override {
    auto [xa, xb] = split_point(x);
    auto [ya, yb] = split_point(y);
    int na = a_->ambient_dim();
    Tangent ta = a_->transport(xa, ya, a_->tangent(xa, slice(h.v, 0, na)));
    Tangent tb = b_->transport(xb, yb, b_->tangent(xb, slice(h.v, na, b_->ambient_dim())));
    Tangent t;
    t.base = y;
    t.v = concat(ta.v, tb.v);
    t.norm = h.norm;
    return t;
  }

  Tangent dexp(const Point& x, const Tangent& v, const Tangent& h) const override {
    auto [xa, xb] = split_point(x);
    int na = a_->ambient_dim();
    Tangent ra = a_->dexp(xa, a_->tangent(xa, slice(v.v, 0, na)),
                          a_->tangent(xa, slice(h.v, 0, na)));
    Tangent rb = b_->dexp(xb, b_->tangent(xb, slice(v.v, na, b_->ambient_dim())),
                          b_->tangent(xb, slice(h.v, na, b_->ambient_dim())));
    Point y = exp(x, v);
    Tangent t;
    t.base = y;
    t.v = concat(ra.v, rb.v);
    t.norm = metric_norm(y, t.v);
    return t;
  }

  Tangent dinvexp(const Point& x, const Point& y, const Tangent& h) const override {
    auto [xa, xb] = split_point(x);
    auto [ya, yb] = split_point(y);
    int na = a_->ambient_dim();
    Tangent ra = a_->dinvexp(xa, ya, a_->tangent(ya, slice(h.v, 0, na)));
    Tangent rb = b_->dinvexp(xb, yb, b_->tangent(yb, slice(h.v, na, b_->ambient_dim())));
    Tangent t;
    t.base = x;
    t.v = concat(ra.v, rb.v);
    t.norm = metric_norm(x, t.v);
    return t;
  }

  std::vector<Tangent> frame(const Point& x) const override {
    auto [xa, xb] = split_point(x);
    std::vector<Tangent> E;
    for (const Tangent& e : a_->frame(xa))
      E.push_back(tangent(x, concat(e.v, zeros(b_->ambient_dim()))));
    for (const Tangent& e : b_->frame(xb))
      E.push_back(tangent(x, concat(zeros(a_->ambient_dim()), e.v)));
    return E;
  }

  double chart_radius(const Point& x) const override {
    auto [xa, xb] = split_point(x);
    return std::min(a_->chart_radius(xa), b_->chart_radius(xb));
  }

  Point join(const Point& pa, const Point& pb) const {
    Point r;
    r.M = this;
    r.x = concat(pa.x, pb.x);
    return r;
  }

  std::pair<Point, Point> split_point(const Point& p) const {
    Point pa, pb;
    pa.M = a_;
    pb.M = b_;
    pa.x = slice(p.x, 0, a_->ambient_dim());
    pb.x = slice(p.x, a_->ambient_dim(), b_->ambient_dim());
    a_->validate(pa);
    b_->validate(pb);
    return {pa, pb};
  }

  const Manifold* first() const { return a_; }
  const Manifold* second() const { return b_; }

 private:
  const Manifold* a_;
  const Manifold* b_;
};

}  // namespace renv
