// Numerically integrated geometry for conformally flat half-plane metrics
// g_ij = e^{2 phi} delta_ij with phi(x1,x2) = -a ln(x2): geodesic shooting,
// log by damped-Newton shooting, the parallel-transport ODE, and curvature
// evaluation/verification via the circumference deficit of geodesic circles.
//
// The production metric is a = 2 (g_ij = delta_ij / x2^4, Gauss curvature
// -2 x2^2); a = 1 gives the constant-curvature half-plane used to
// cross-validate the ODE machinery against closed-form transport.
#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "renv/core.hpp"
#include "renv/manifold.hpp"

namespace renv {

struct ConformalMetric {
  double a = 2.0;       // conformal exponent: phi = -a ln(x2)
  double x2_min = 0.2;  // working-region box (the metric degenerates at x2 = 0)
  double x2_max = 50.0;

  double phi(const Vec& p) const { return -a * std::log(p[1]); }
  Vec grad_phi(const Vec& p) const { return {0.0, -a / p[1]}; }
  double lap_phi(const Vec& p) const { return a / (p[1] * p[1]); }

  // e^{2 phi}, the common factor of the metric tensor.
  double conf2(const Vec& p) const { return std::pow(p[1], -2.0 * a); }

  double metric_dot(const Vec& p, const Vec& u, const Vec& w) const {
    return conf2(p) * edot(u, w);
  }
  double metric_norm(const Vec& p, const Vec& u) const {
    return std::sqrt(std::max(0.0, metric_dot(p, u, u)));
  }

  // K = -e^{-2 phi} (Laplacian of phi); equals -a x2^{2a-2}.
  double gauss_curvature(const Vec& p) const { return -lap_phi(p) / conf2(p); }

  bool in_region(const Vec& p) const { return p[1] >= x2_min && p[1] <= x2_max; }

  // Exact distance from p to the horizontal region boundaries; any metric
  // ball of smaller radius stays inside the box.
  double boundary_distance(const Vec& p) const {
    double up, down;
    if (a == 1.0) {
      up = std::log(x2_max / p[1]);
      down = std::log(p[1] / x2_min);
    } else {
      double e = 1.0 - a;
      up = (std::pow(x2_max, e) - std::pow(p[1], e)) / e;
      down = (std::pow(p[1], e) - std::pow(x2_min, e)) / e;
    }
    return std::min(up, down);
  }
};

struct IntegratorConfig {
  int steps_per_unit = 1000;  // fixed RK4 steps per unit arclength
  int min_steps = 100;
  int newton_max_iter = 50;
  double newton_tol = 1e-10;
};

namespace detail {

// Geodesic right-hand side for a conformal metric:
//   x'' = -2 (grad_phi . x') x' + |x'|^2_e grad_phi.
inline void geodesic_rhs(const ConformalMetric& g, const Vec& x, const Vec& xd, Vec& ax) {
  Vec gp = g.grad_phi(x);
  double gd = edot(gp, xd);
  double sp = edot(xd, xd);
  ax = (-2.0 * gd) * xd + sp * gp;
}

// Parallel-transport right-hand side along a curve with velocity xd:
//   v' = -[(grad_phi . x') v + (grad_phi . v) x' - (x' . v)_e grad_phi].
inline void transport_rhs(const ConformalMetric& g, const Vec& x, const Vec& xd, const Vec& v,
                          Vec& vd) {
  Vec gp = g.grad_phi(x);
  vd = (-edot(gp, xd)) * v - edot(gp, v) * xd + edot(xd, v) * gp;
}

struct GeoState {
  Vec x, xd, v;  // position, velocity, transported vector (v unused unless enabled)
  bool with_v = false;
};

inline GeoState state_rhs(const ConformalMetric& g, const GeoState& s) {
  GeoState d;
  d.with_v = s.with_v;
  d.x = s.xd;
  geodesic_rhs(g, s.x, s.xd, d.xd);
  if (s.with_v)
    transport_rhs(g, s.x, s.xd, s.v, d.v);
  else
    d.v = zeros(2);
  return d;
}

inline GeoState axpy(const GeoState& s, double h, const GeoState& d) {
  GeoState r;
  r.with_v = s.with_v;
  r.x = s.x + h * d.x;
  r.xd = s.xd + h * d.xd;
  r.v = s.v + h * d.v;
  return r;
}

inline GeoState rk4_trajectory(const ConformalMetric& g, GeoState s, double t, int n) {
  double h = t / n;
  for (int i = 0; i < n; ++i) {
    GeoState k1 = state_rhs(g, s);
    GeoState k2 = state_rhs(g, axpy(s, 0.5 * h, k1));
    GeoState k3 = state_rhs(g, axpy(s, 0.5 * h, k2));
    GeoState k4 = state_rhs(g, axpy(s, h, k3));
    GeoState sum = k1;
    sum.x = k1.x + 2.0 * k2.x + 2.0 * k3.x + k4.x;
    sum.xd = k1.xd + 2.0 * k2.xd + 2.0 * k3.xd + k4.xd;
    sum.v = k1.v + 2.0 * k2.v + 2.0 * k3.v + k4.v;
    s = axpy(s, h / 6.0, sum);
    if (!g.in_region(s.x))
      throw LeftWorkingRegion("geodesic left the working region x2 in [" +
                              format_double(g.x2_min) + ", " + format_double(g.x2_max) + "]");
  }
  return s;
}

inline int step_count(const ConformalMetric& g, const IntegratorConfig& cfg, const Vec& x,
                      const Vec& v, double t) {
  double arclen = g.metric_norm(x, v) * std::abs(t);
  int n = static_cast<int>(std::ceil(cfg.steps_per_unit * arclen));
  return std::max(cfg.min_steps, n);
}

}  // namespace detail

// Integrates the geodesic with initial position x and velocity v for
// parameter time t; returns endpoint position and velocity.
inline std::pair<Vec, Vec> geodesic_shoot(const ConformalMetric& g, const Vec& x, const Vec& v,
                                          double t, const IntegratorConfig& cfg) {
  if (!g.in_region(x)) throw LeftWorkingRegion("geodesic_shoot: start outside working region");
  if (t == 0.0 || edot(v, v) == 0.0) return {x, v};
  detail::GeoState s;
  s.x = x;
  s.xd = v;
  s.v = zeros(2);
  s = detail::rk4_trajectory(g, s, t, detail::step_count(g, cfg, x, v, t));
  return {s.x, s.xd};
}

namespace detail {

struct LogAttempt {
  Vec w;
  double rn = kInf;  // endpoint miss (chart norm) at w
};

// One damped-Newton run from the initial velocity w, with finite-difference
// shooting Jacobian; optionally finishes with a slow derivative-free
// coordinate search ("rescue").  Never throws on stagnation: it reports the
// best miss reached, so the caller can try other starting velocities.
inline LogAttempt log_attempt(const ConformalMetric& g, const Vec& x, const Vec& y,
                              const IntegratorConfig& cfg, Vec w, bool rescue) {
  auto residual = [&](const Vec& cand) -> Vec {
    auto [end, vel] = geodesic_shoot(g, x, cand, 1.0, cfg);
    (void)vel;
    return end - y;
  };
  Vec r;
  // A start that immediately shoots out of the working region is pulled back
  // toward zero until it evaluates; zero velocity stays at x, so the loop
  // terminates with a usable (if crude) starting point.
  double rn = kInf;
  for (int shrink = 0; shrink < 60 && !(rn < kInf); ++shrink) {
    try {
      r = residual(w);
      rn = enorm(r);
    } catch (const LeftWorkingRegion&) {
      w = 0.5 * w;
    }
  }
  if (!(rn < kInf)) return {w, kInf};
  for (int it = 0; it < cfg.newton_max_iter && rn > cfg.newton_tol; ++it) {
    double delta = 1e-7 * (1.0 + enorm(w));
    Vec cols[2];
    bool jac_ok = true;
    try {
      for (int j = 0; j < 2; ++j) {
        Vec wp = w;
        wp[j] += delta;
        cols[j] = (1.0 / delta) * (residual(wp) - r);
      }
    } catch (const LeftWorkingRegion&) {
      jac_ok = false;
    }
    if (!jac_ok) break;
    double det = cols[0][0] * cols[1][1] - cols[1][0] * cols[0][1];
    if (std::abs(det) < 1e-300) break;
    Vec step = {(-r[0] * cols[1][1] + r[1] * cols[1][0]) / det,
                (-r[1] * cols[0][0] + r[0] * cols[0][1]) / det};
    double damp = 1.0;
    bool stalled = true;
    for (int k = 0; k < 8; ++k) {
      Vec cand = w + damp * step;
      Vec rc;
      bool ok = true;
      try {
        rc = residual(cand);
      } catch (const LeftWorkingRegion&) {
        ok = false;
      }
      if (ok && enorm(rc) < rn * (1.0 - 0.25 * damp)) {
        w = cand;
        r = rc;
        rn = enorm(r);
        stalled = false;
        break;
      }
      damp *= 0.5;
    }
    if (stalled) break;
  }
  // Rescue: direct coordinate search on the endpoint miss distance.  Orders
  // of magnitude slower than a Newton step, so only the last-resort attempt
  // asks for it.
  if (rescue && rn > cfg.newton_tol) {
    double h = std::max(rn, 1e-6);
    for (int it = 0; it < 400 && rn > cfg.newton_tol && h > 1e-14; ++it) {
      bool improved = false;
      for (int j = 0; j < 2 && !improved; ++j) {
        for (double sgn : {1.0, -1.0}) {
          Vec cand = w;
          cand[j] += sgn * h;
          double rc;
          try {
            rc = enorm(residual(cand));
          } catch (const LeftWorkingRegion&) {
            continue;
          }
          if (rc < rn) {
            w = cand;
            rn = rc;
            improved = true;
            break;
          }
        }
      }
      if (!improved) h *= 0.5;
    }
  }
  return {w, rn};
}

}  // namespace detail

// Inverse of time-1 shooting: returns the velocity w with shoot(x, w, 1) = y.
// Damped Newton with a finite-difference Jacobian, tried from several starts:
// the caller's hint (if any), the flat-chart difference y - x, and a midpoint
// continuation that solves x -> (x+y)/2 recursively and doubles the result.
// The continuation start is what makes wide same-height pairs tractable: the
// metric is invariant under x1 translation, so the full geodesic repeats the
// half arc and the doubled half velocity is nearly exact.
inline Vec log_numeric(const ConformalMetric& g, const Vec& x, const Vec& y,
                       const IntegratorConfig& cfg, const Vec* hint = nullptr,
                       int depth = 0) {
  if (enorm(y - x) == 0.0) return zeros(2);
  detail::LogAttempt best{y - x, kInf};
  auto consider = [&](const Vec& w0, bool rescue) {
    auto a = detail::log_attempt(g, x, y, cfg, w0, rescue);
    if (a.rn < best.rn) best = a;
    return best.rn <= cfg.newton_tol;
  };
  bool done = (hint != nullptr && consider(*hint, false)) || consider(y - x, false);
  if (!done && depth < 6) {
    try {
      Vec w_half = log_numeric(g, x, 0.5 * (x + y), cfg, nullptr, depth + 1);
      done = consider(2.0 * w_half, false);
    } catch (const ShootingDiverged&) {
      // keep the starts we already have
    }
  }
  if (!done) consider(best.w, true);
  if (best.rn > cfg.newton_tol * 10.0 && best.rn > 1e-8)
    throw ShootingDiverged("log_numeric: no convergence after max iterations");
  return best.w;
}

// Parallel transport of h from x to y along the minimizing geodesic,
// integrating the transport ODE jointly with the geodesic.
inline Vec transport_numeric(const ConformalMetric& g, const Vec& x, const Vec& y, const Vec& h,
                             const IntegratorConfig& cfg) {
  if (enorm(y - x) == 0.0) return h;
  Vec w = log_numeric(g, x, y, cfg);
  detail::GeoState s;
  s.x = x;
  s.xd = w;
  s.v = h;
  s.with_v = true;
  s = detail::rk4_trajectory(g, s, 1.0, detail::step_count(g, cfg, x, w, 1.0));
  return s.v;
}

inline double dist_numeric(const ConformalMetric& g, const Vec& x, const Vec& y,
                           const IntegratorConfig& cfg) {
  return g.metric_norm(x, log_numeric(g, x, y, cfg));
}

// Estimates the Gauss curvature at p from the circumference deficit of the
// geodesic circle of radius r:  K ~ 3 (2 pi r - Circ(r)) / (pi r^3).
// The circle is sampled by shooting kRays unit-speed rays; its circumference
// is integrated from 8th-order periodic finite-difference derivatives of the
// sampled curve (a chord polygon is too crude: its defect is the same order
// as the curvature deficit itself).
inline double curvature_check(const ConformalMetric& g, const Vec& p, double r,
                              const IntegratorConfig& cfg) {
  constexpr int kRays = 256;
  constexpr double kTwoPi = 6.283185307179586476925286766559;
  double ephi = std::exp(-g.phi(p));  // coordinate length of a g-unit vector
  std::array<Vec, kRays> pts;
  for (int k = 0; k < kRays; ++k) {
    double th = kTwoPi * k / kRays;
    Vec u = {ephi * std::cos(th), ephi * std::sin(th)};
    pts[k] = geodesic_shoot(g, p, u, r, cfg).first;
  }
  // d gamma / d theta by 8th-order central differences on the periodic grid.
  static constexpr double c[4] = {4.0 / 5.0, -1.0 / 5.0, 4.0 / 105.0, -1.0 / 280.0};
  double hthet = kTwoPi / kRays;
  double circ = 0.0;
  for (int k = 0; k < kRays; ++k) {
    Vec d = zeros(2);
    for (int j = 1; j <= 4; ++j) {
      const Vec& fwd = pts[(k + j) % kRays];
      const Vec& bwd = pts[(k - j + kRays) % kRays];
      d += (c[j - 1] / hthet) * (fwd - bwd);
    }
    circ += g.metric_norm(pts[k], d) * hthet;
  }
  double pi = 0.5 * kTwoPi;
  return 3.0 * (kTwoPi * r - circ) / (pi * r * r * r);
}

// ---------------------------------------------------------------------------
// Manifold adapter so envelopes and checkers run unchanged on the warped
// half-plane.  Tangent components are plain chart coordinates; exp/log/
// transport delegate to the integrators above.  Injectivity and convexity
// radii are effectively bounded by the working region, which the integrators
// enforce by raising LeftWorkingRegion.

class WarpedHalfPlane : public Manifold {
 public:
  explicit WarpedHalfPlane(ConformalMetric g = {}, IntegratorConfig cfg = {})
      : g_(g), cfg_(cfg) {}

  const ConformalMetric& metric() const { return g_; }
  const IntegratorConfig& integrator() const { return cfg_; }

  std::string name() const override { return "warped-halfplane"; }
  int dim() const override { return 2; }
  int ambient_dim() const override { return 2; }
  double curvature_bound() const override {
    return std::max(std::abs(g_.gauss_curvature({0.0, g_.x2_min})),
                    std::abs(g_.gauss_curvature({0.0, g_.x2_max})));
  }
  double injectivity_radius() const override { return kInf; }
  double convexity_radius() const override { return kInf; }

  void validate(const Point& p) const override {
    if (p.x.size() != 2) throw DomainError("half-plane point has wrong dimension");
    if (!(p.x[1] > 0)) throw DomainError("half-plane requires x2 > 0");
    if (!g_.in_region(p.x)) throw LeftWorkingRegion("point outside the working region");
  }

  double metric_dot(const Point& p, const Vec& u, const Vec& w) const override {
    return g_.metric_dot(p.x, u, w);
  }

  Point exp(const Point& x, const Tangent& v) const override {
    Point r;
    r.M = this;
    r.x = geodesic_shoot(g_, x.x, v.v, 1.0, cfg_).first;
    return r;
  }

  Tangent log(const Point& x, const Point& y) const override {
    return tangent(x, log_vec(x.x, y.x));
  }

  double dist(const Point& x, const Point& y) const override {
    return g_.metric_norm(x.x, log_vec(x.x, y.x));
  }

  Tangent transport(const Point& x, const Point& y, const Tangent& h) const override {
    Vec w = log_vec(x.x, y.x);
    detail::GeoState s;
    s.x = x.x;
    s.xd = w;
    s.v = h.v;
    s.with_v = true;
    s = detail::rk4_trajectory(g_, s, 1.0, detail::step_count(g_, cfg_, x.x, w, 1.0));
    Tangent t;
    t.base = y;
    t.v = s.v;
    t.norm = metric_norm(y, t.v);
    return t;
  }

  // No closed-form Jacobi fields here: first-order finite differences of the
  // shooting map (adequate for the order-of-magnitude gap diagnostics).
  Tangent dexp(const Point& x, const Tangent& v, const Tangent& h) const override {
    double eps = 1e-6 * (1.0 + enorm(v.v));
    Point y = exp(x, v);
    Tangent vp = tangent(x, v.v + eps * h.v);
    Point yp = exp(x, vp);
    Tangent r;
    r.base = y;
    r.v = (1.0 / eps) * (yp.x - y.x);
    r.norm = metric_norm(y, r.v);
    return r;
  }

  Tangent dinvexp(const Point& x, const Point& y, const Tangent& h) const override {
    double eps = 1e-6 * (1.0 + enorm(y.x));
    Vec l0 = log_vec(x.x, y.x);
    Vec l1 = log_vec(x.x, y.x + eps * h.v);
    return tangent(x, (1.0 / eps) * (l1 - l0));
  }

  std::vector<Tangent> frame(const Point& x) const override {
    // Normalized coordinate basis: {e1, e2} scaled by e^{-phi} = x2^a.
    double s = std::exp(-g_.phi(x.x));
    return {tangent(x, {s, 0.0}), tangent(x, {0.0, s})};
  }

  // Radius of the largest metric ball around p certain to stay inside the
  // working region; solvers intersect localization balls with this.
  double safe_radius(const Point& p) const { return g_.boundary_distance(p.x); }

  // Keep chart searches strictly inside the region so the integrator never
  // steps out at the very last grid point.
  double chart_radius(const Point& p) const override { return 0.98 * safe_radius(p); }

 private:
  ConformalMetric g_;
  IntegratorConfig cfg_;

  struct LogSlot {
    Vec x, y, w;
    bool valid = false;
  };
  mutable std::array<LogSlot, 4> slots_{};
  mutable int next_slot_ = 0;

  // Warm-start cache for the shooting solver.  Envelope solvers probe
  // spatially coherent endpoint sequences, so the previous solution —
  // corrected to first order for the endpoint moves — is typically one or
  // two Newton steps from the answer, where a cold start needs a dozen.
  // Not thread-safe; all suites here evaluate fields sequentially.
  Vec log_vec(const Vec& x, const Vec& y) const {
    const LogSlot* hit = nullptr;
    double hd = kInf;
    for (const auto& s : slots_) {
      if (!s.valid) continue;
      double d = enorm(x - s.x) + enorm(y - s.y);
      if (d < hd) {
        hd = d;
        hit = &s;
      }
    }
    Vec w;
    if (hit != nullptr && hd < 2.0 + 0.5 * enorm(y - x)) {
      Vec init = hit->w + (y - hit->y) - (x - hit->x);
      w = log_numeric(g_, x, y, cfg_, &init);
    } else {
      w = log_numeric(g_, x, y, cfg_);
    }
    slots_[next_slot_] = {x, y, w, true};
    next_slot_ = (next_slot_ + 1) % static_cast<int>(slots_.size());
    return w;
  }
};

}  // namespace renv
