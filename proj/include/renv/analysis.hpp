// Finite-difference differential estimators in exponential charts, convexity
// and semiconvexity checkers along geodesics, and the comparison gaps between
// d exp / d exp^{-1} and parallel transport.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "renv/core.hpp"
#include "renv/field.hpp"
#include "renv/manifold.hpp"
#include "renv/report.hpp"

namespace renv {

struct DiffConfig {
  double h_grad = 1e-5;  // gradient step, scaled by (1 + local coordinate size)
  double h_hess = 1e-3;  // second-difference step (Richardson-extrapolated)
  int n_samples = 200;
  unsigned long long seed = kDefaultSeed;
};

// Comparison slack absorbing solver and finite-difference noise.
inline double slack(double a, double b) {
  return 1e-9 + 1e-7 * std::max(std::abs(a), std::abs(b));
}

// -- derivatives --------------------------------------------------------------

// Riemannian gradient via central differences of f∘exp_x along an orthonormal
// frame.
inline Tangent num_gradient(const ScalarField& f, const Point& x, const DiffConfig& cfg = {}) {
  const Manifold& M = *f.M;
  const std::vector<Tangent> E = M.frame(x);
  const double h = cfg.h_grad * (1.0 + enorm(x.x));
  Vec comps = zeros(M.ambient_dim());
  for (int i = 0; i < M.dim(); ++i) {
    Vec u = zeros(M.dim());
    u[i] = h;
    double fp = f(M.chart_point(x, E, u));
    u[i] = -h;
    double fm = f(M.chart_point(x, E, u));
    double gi = (fp - fm) / (2.0 * h);
    for (int k = 0; k < comps.size(); ++k) comps[k] += gi * E[i].v[k];
  }
  return M.tangent(x, comps);
}

// Second derivative of t -> f(exp_x(t v)) at t=0 for unit v, i.e. the Hessian
// quadratic form Hess f(v,v), by Richardson-extrapolated central second
// differences.
inline double hessian_quadform(const ScalarField& f, const Point& x, const Tangent& v,
                               const DiffConfig& cfg = {}) {
  const Manifold& M = *f.M;
  Tangent dir = v;
  if (dir.norm > 0) {
    dir.v *= 1.0 / dir.norm;
    dir.norm = 1.0;
  }
  double f0 = f(x);
  auto second = [&](double t) {
    Tangent s = dir;
    s.v *= t;
    s.norm = t;
    double fp = f(M.exp(x, s));
    s.v *= -1.0;
    double fm = f(M.exp(x, s));
    return (fp - 2.0 * f0 + fm) / (t * t);
  };
  double d1 = second(cfg.h_hess);
  double d2 = second(cfg.h_hess / 2.0);
  return (4.0 * d2 - d1) / 3.0;
}

namespace detail {

// Deterministic sample point in the ball B(center, radius): direction from a
// seeded Rng, radius with uniform-in-ball radial law.
inline Point ball_sample(const Manifold& M, const Point& center, double radius, Rng& rng) {
  int d = M.dim();
  Vec u = zeros(d);
  double n2 = 0.0;
  do {
    n2 = 0.0;
    for (int i = 0; i < d; ++i) {
      u[i] = rng.normal();
      n2 += u[i] * u[i];
    }
  } while (n2 < 1e-24);
  double r = radius * std::pow(rng.uniform(), 1.0 / d) / std::sqrt(n2);
  for (int i = 0; i < d; ++i) u[i] *= r;
  return M.chart_point(center, M.frame(center), u);
}

}  // namespace detail

// Largest sampled quotient ‖∇f(x) − L_{yx} ∇f(y)‖ / d(x,y) over seeded random
// pairs in B(center, radius) with d(x,y) ∈ [1e-3, radius].
inline double grad_lip_estimate(const ScalarField& f, const Point& center, double radius,
                                int n_pairs, const DiffConfig& cfg = {}) {
  const Manifold& M = *f.M;
  Rng rng(cfg.seed);
  double worst = 0.0;
  int done = 0;
  int guard = 0;
  while (done < n_pairs && guard < 50 * n_pairs) {
    ++guard;
    Point x = detail::ball_sample(M, center, radius, rng);
    Point y = detail::ball_sample(M, center, radius, rng);
    double d = M.dist(x, y);
    if (d < 1e-3 || d > 2.0 * radius) continue;
    Tangent gx = num_gradient(f, x, cfg);
    Tangent gy = num_gradient(f, y, cfg);
    Tangent gyx = M.transport(y, x, gy);
    Vec diff = gx.v;
    diff -= gyx.v;
    worst = std::max(worst, M.metric_norm(x, diff) / d);
    ++done;
  }
  return worst;
}

// Largest sampled quotient |f(x) − f(y)| / d(x,y): a lower estimate of the
// Lipschitz constant on the ball.
inline double lip_estimate(const ScalarField& f, const Point& center, double radius, int n_pairs,
                           const DiffConfig& cfg = {}) {
  const Manifold& M = *f.M;
  Rng rng(cfg.seed);
  double worst = 0.0;
  int done = 0;
  int guard = 0;
  while (done < n_pairs && guard < 50 * n_pairs) {
    ++guard;
    Point x = detail::ball_sample(M, center, radius, rng);
    Point y = detail::ball_sample(M, center, radius, rng);
    double d = M.dist(x, y);
    if (d < 1e-3) continue;
    worst = std::max(worst, std::abs(f(x) - f(y)) / d);
    ++done;
  }
  return worst;
}

// -- convexity along geodesics ------------------------------------------------

// Midpoint convexity on B(center, radius): F(m) ≤ ½F(p) + ½F(q) + slack at
// the geodesic midpoint, over seeded random pairs.
inline CheckReport midpoint_convexity_check(const ScalarField& F, const Point& center,
                                            double radius, int n_samples,
                                            const DiffConfig& cfg = {}) {
  const Manifold& M = *F.M;
  Rng rng(cfg.seed);
  CheckReport rep;
  rep.title = "midpoint-convexity";
  rep.params = "radius=" + format_double(radius) + " n=" + std::to_string(n_samples) +
               " seed=" + std::to_string(cfg.seed);
  for (int i = 0; i < n_samples; ++i) {
    ++rep.attempted;
    Point p = detail::ball_sample(M, center, radius, rng);
    Point q = detail::ball_sample(M, center, radius, rng);
    Point m = M.midpoint(p, q);
    double fp = F(p), fq = F(q);
    double viol = F(m) - 0.5 * (fp + fq);
    std::string id = "pair" + std::to_string(i);
    rep.note(viol, id);
    if (viol > slack(fp, fq)) {
      rep.passed = false;
      rep.add(make_row(rep.title, M.name(), 0, 0, 0, cfg.seed, id, viol, 0.0, 0.0));
    }
  }
  return rep;
}

// f is C-semiconvex on B(x0,R) iff f + C d(·,x0)² is geodesically convex there.
inline CheckReport semiconvexity_check(const ScalarField& f, double C, const Point& x0, double R,
                                       int n_samples, const DiffConfig& cfg = {}) {
  ScalarField shifted = affine_combination(f, 1.0, dist2_field(*f.M, x0), C);
  CheckReport rep = midpoint_convexity_check(shifted, x0, R, n_samples, cfg);
  rep.title = "semiconvexity";
  return rep;
}

// f is C-semiconcave iff -f is C-semiconvex, i.e. C d(·,x0)² − f is convex.
inline CheckReport semiconcavity_check(const ScalarField& f, double C, const Point& x0, double R,
                                       int n_samples, const DiffConfig& cfg = {}) {
  ScalarField shifted = affine_combination(negate(f), 1.0, dist2_field(*f.M, x0), C);
  CheckReport rep = midpoint_convexity_check(shifted, x0, R, n_samples, cfg);
  rep.title = "semiconcavity";
  return rep;
}

// -- exp/transport comparison gaps ---------------------------------------------

namespace detail {

// Operator norm by direction sampling over the unit sphere of T_xM.
template <typename Op>
double sampled_op_norm(const Manifold& M, const Point& x, int dim, Op&& op, int n_dirs = 256) {
  const std::vector<Tangent> E = M.frame(x);
  double worst = 0.0;
  for (int j = 0; j < n_dirs; ++j) {
    Vec u = zeros(dim);
    if (dim == 1) {
      u[0] = 1.0;
      j = n_dirs;  // only one direction up to sign
    } else if (dim == 2) {
      double th = 2.0 * M_PI * j / n_dirs;
      u[0] = std::cos(th);
      u[1] = std::sin(th);
    } else {
      // deterministic spiral on S^2
      double z = 1.0 - (2.0 * j + 1.0) / n_dirs;
      double r = std::sqrt(std::max(0.0, 1.0 - z * z));
      double th = 2.3999632297286533 * j;
      u[0] = r * std::cos(th);
      u[1] = r * std::sin(th);
      u[2] = z;
    }
    Vec comps = zeros(M.ambient_dim());
    for (int i = 0; i < dim; ++i)
      for (int k = 0; k < comps.size(); ++k) comps[k] += u[i] * E[i].v[k];
    worst = std::max(worst, op(M.tangent(x, comps)));
  }
  return worst;
}

}  // namespace detail

// Operator norm of d exp_x(v) − L_{x,exp_x(v)} over unit tangents at x.
// Closed form on constant curvature: |sin θ/θ − 1| (K>0), |sinh θ/θ − 1|
// (K<0), θ = √|K| ‖v‖, attained on the orthogonal complement of v.
inline double dexp_transport_gap(const Manifold& M, const Point& x, const Tangent& v,
                                 bool force_sampled = false) {
  double K = 0.0;
  if (!force_sampled && M.constant_curvature(&K)) {
    if (K == 0.0) return 0.0;
    double th = std::sqrt(std::abs(K)) * v.norm;
    if (th < 1e-12) return 0.0;
    return K > 0 ? std::abs(std::sin(th) / th - 1.0) : std::abs(std::sinh(th) / th - 1.0);
  }
  Point y = M.exp(x, v);
  return detail::sampled_op_norm(M, x, M.dim(), [&](const Tangent& h) {
    Tangent a = M.dexp(x, v, h);
    Tangent b = M.transport(x, y, h);
    Vec diff = a.v;
    diff -= b.v;
    return M.metric_norm(y, diff);
  });
}

// Operator norm of d(exp_x^{-1})(y) ∘ L_{xy} − I over unit tangents at x,
// y = exp_x(v). Closed form: |θ/sin θ − 1| (K>0), |θ/sinh θ − 1| (K<0).
inline double invexp_transport_gap(const Manifold& M, const Point& x, const Tangent& v,
                                   bool force_sampled = false) {
  double K = 0.0;
  if (!force_sampled && M.constant_curvature(&K)) {
    if (K == 0.0) return 0.0;
    double th = std::sqrt(std::abs(K)) * v.norm;
    if (th < 1e-12) return 0.0;
    return K > 0 ? std::abs(th / std::sin(th) - 1.0) : std::abs(th / std::sinh(th) - 1.0);
  }
  Point y = M.exp(x, v);
  return detail::sampled_op_norm(M, x, M.dim(), [&](const Tangent& h) {
    Tangent hy = M.transport(x, y, h);
    Tangent back = M.dinvexp(x, y, hy);
    Vec diff = back.v;
    diff -= h.v;
    return M.metric_norm(x, diff);
  });
}

// Least-squares slope of log(gap) against log(t): the comparison gaps decay
// like d(x,y)², so the fitted slope should sit near 2.
inline double gap_order_fit(const Manifold& M, const Point& x, const Tangent& dir,
                            const std::vector<double>& t_list, bool inverse_map = false,
                            bool force_sampled = false) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (double t : t_list) {
    Tangent v = dir;
    v.v *= t / std::max(dir.norm, 1e-300);
    v.norm = t;
    double gap = inverse_map ? invexp_transport_gap(M, x, v, force_sampled)
                             : dexp_transport_gap(M, x, v, force_sampled);
    if (gap <= 0) continue;
    double lx = std::log(t), ly = std::log(gap);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    ++n;
  }
  if (n < 2) return 0.0;
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

// Sampled verification of the two-base-point exponential comparison
// d(exp_x(L_{zx} w), exp_z(w)) ≤ (1+ε) d(x,z) for d(x,z) ≤ r, ‖w‖ ≤ r.
// Reports the smallest ε the samples allow (max ratio − 1).
inline CheckReport exp_comparison_check(const Manifold& M, double eps, double r, int n_samples,
                                        const Point& center, const DiffConfig& cfg = {}) {
  Rng rng(cfg.seed);
  CheckReport rep;
  rep.title = "exp-comparison";
  rep.params = "eps=" + format_double(eps) + " r=" + format_double(r) +
               " n=" + std::to_string(n_samples) + " seed=" + std::to_string(cfg.seed);
  for (int i = 0; i < n_samples; ++i) {
    ++rep.attempted;
    Point x = detail::ball_sample(M, center, r, rng);
    Point z = detail::ball_sample(M, center, r, rng);
    double dxz = M.dist(x, z);
    if (dxz < 1e-6) continue;
    // tangent at z with norm <= r
    Vec u = zeros(M.dim());
    for (int k = 0; k < M.dim(); ++k) u[k] = rng.normal();
    double n2 = enorm(u);
    double scale = r * rng.uniform() / std::max(n2, 1e-300);
    for (int k = 0; k < M.dim(); ++k) u[k] *= scale;
    const std::vector<Tangent> Ez = M.frame(z);
    Vec comps = zeros(M.ambient_dim());
    for (int k = 0; k < M.dim(); ++k)
      for (int j = 0; j < comps.size(); ++j) comps[j] += u[k] * Ez[k].v[j];
    Tangent w = M.tangent(z, comps);
    Point ez = M.exp(z, w);
    Point ex = M.exp(x, M.transport(z, x, w));
    double ratio = M.dist(ex, ez) / dxz;
    rep.note(ratio - 1.0, "pair" + std::to_string(i));
    if (ratio > 1.0 + eps + 1e-12) {
      rep.passed = false;
      rep.add(make_row(rep.title, M.name(), 0, 0, 0, cfg.seed, "pair" + std::to_string(i),
                       ratio, 1.0 + eps, 0.0));
    }
  }
  return rep;
}

// -- C^{1,1} constant cross-check ----------------------------------------------

struct C11Estimates {
  double transport_quotient = 0.0;  // ‖∇f(x) − L ∇f(exp_x(tv))‖ / t at small t
  double chart_taylor = 0.0;        // 2|f(exp_x u) − f(x) − ⟨∇f(x),u⟩| / ‖u‖²
  double chart_gradient = 0.0;      // ‖∇(f∘exp_x)(u) − ∇(f∘exp_x)(0)‖ / ‖u‖
  double hessian_sup = 0.0;         // max |Hess f(v,v)| over unit v
  double spread() const {
    double lo = std::min(std::min(transport_quotient, chart_taylor),
                         std::min(chart_gradient, hessian_sup));
    double hi = std::max(std::max(transport_quotient, chart_taylor),
                         std::max(chart_gradient, hessian_sup));
    return lo > 0 ? (hi - lo) / lo : kInf;
  }
};

// Estimates the gradient-Lipschitz constant of f on B(x0,R) four independent
// ways (transported-gradient quotient, chart Taylor remainder, chart gradient
// difference, Hessian sup) on a deterministic stratified sample, and passes
// when the four agree within the given relative spread.
inline C11Estimates c11_estimates(const ScalarField& f, const Point& x0, double R,
                                  const DiffConfig& cfg = {}) {
  const Manifold& M = *f.M;
  C11Estimates est;
  const int n_radial = 4, n_dirs = 8;
  const double t_small = 1e-3, u_small = 1e-2;
  for (int ir = 0; ir <= n_radial; ++ir) {
    double rho = R * ir / n_radial * 0.999;
    for (int jd = 0; jd < (ir == 0 ? 1 : n_dirs); ++jd) {
      // base point at distance rho from x0
      Vec ub = zeros(M.dim());
      double phi = 2.0 * M_PI * (jd + 0.3) / n_dirs;
      ub[0] = rho * std::cos(phi);
      if (M.dim() > 1) ub[1] = rho * std::sin(phi);
      Point x = M.chart_point(x0, M.frame(x0), ub);
      const std::vector<Tangent> E = M.frame(x);
      Tangent gx = num_gradient(f, x, cfg);
      for (int kd = 0; kd < n_dirs; ++kd) {
        double th = 2.0 * M_PI * (kd + 0.5) / n_dirs;
        Vec u = zeros(M.dim());
        u[0] = std::cos(th);
        if (M.dim() > 1) u[1] = std::sin(th);

        // (7) Hessian quadratic form
        Vec comps = zeros(M.ambient_dim());
        for (int i = 0; i < M.dim(); ++i)
          for (int k = 0; k < comps.size(); ++k) comps[k] += u[i] * E[i].v[k];
        Tangent v = M.tangent(x, comps);
        est.hessian_sup = std::max(est.hessian_sup, std::abs(hessian_quadform(f, x, v, cfg)));

        // (2) transported-gradient difference quotient at t_small
        Tangent vt = v;
        vt.v *= t_small;
        vt.norm = t_small;
        Point y = M.exp(x, vt);
        Tangent gy = num_gradient(f, y, cfg);
        Tangent gyx = M.transport(y, x, gy);
        Vec dg = gyx.v;
        dg -= gx.v;
        est.transport_quotient =
            std::max(est.transport_quotient, M.metric_norm(x, dg) / t_small);

        // (3) chart Taylor remainder and (6) chart gradient difference at u_small
        Vec uu = u;
        for (int i = 0; i < M.dim(); ++i) uu[i] *= u_small;
        Point xu = M.chart_point(x, E, uu);
        // ⟨∇f(x), u⟩ via chart components of the gradient
        double dot = 0.0;
        for (int i = 0; i < M.dim(); ++i) dot += uu[i] * M.metric_dot(x, gx.v, E[i].v);
        est.chart_taylor = std::max(
            est.chart_taylor, 2.0 * std::abs(f(xu) - f(x) - dot) / (u_small * u_small));

        // (6): gradient of F = f∘exp_x at uu vs at 0, in chart coordinates
        double h = cfg.h_grad * (1.0 + enorm(x.x));
        double diff2 = 0.0;
        for (int i = 0; i < M.dim(); ++i) {
          Vec up = uu, um = uu;
          up[i] += h;
          um[i] -= h;
          double dFi = (f(M.chart_point(x, E, up)) - f(M.chart_point(x, E, um))) / (2.0 * h);
          Vec zp = zeros(M.dim()), zm = zeros(M.dim());
          zp[i] = h;
          zm[i] = -h;
          double dF0 = (f(M.chart_point(x, E, zp)) - f(M.chart_point(x, E, zm))) / (2.0 * h);
          diff2 += (dFi - dF0) * (dFi - dF0);
        }
        est.chart_gradient = std::max(est.chart_gradient, std::sqrt(diff2) / u_small);
      }
    }
  }
  return est;
}

inline CheckReport c11_crosscheck(const ScalarField& f, const Point& x0, double R,
                                  double C_claim, const DiffConfig& cfg = {},
                                  double max_spread = 0.15) {
  C11Estimates est = c11_estimates(f, x0, R, cfg);
  CheckReport rep;
  rep.title = "c11-crosscheck";
  rep.params = "R=" + format_double(R) + " C_claim=" + format_double(C_claim);
  const Manifold& M = *f.M;
  rep.add(make_row(rep.title, M.name(), 0, 0, 0, cfg.seed, "transport_quotient",
                   est.transport_quotient, C_claim, 0.25));
  rep.add(make_row(rep.title, M.name(), 0, 0, 0, cfg.seed, "chart_taylor", est.chart_taylor,
                   C_claim, 0.25));
  rep.add(make_row(rep.title, M.name(), 0, 0, 0, cfg.seed, "chart_gradient", est.chart_gradient,
                   C_claim, 0.25));
  rep.add(make_row(rep.title, M.name(), 0, 0, 0, cfg.seed, "hessian_sup", est.hessian_sup,
                   C_claim, 0.25));
  double spread = est.spread();
  rep.note(spread - max_spread, "spread");
  Row srow = make_row(rep.title, M.name(), 0, 0, 0, cfg.seed, "relative_spread", spread,
                      max_spread, 0.0);
  srow.status = spread <= max_spread ? "pass" : "fail";
  rep.add(srow);
  return rep;
}

}  // namespace renv
