// Inf-convolution f_lambda(x) = inf_y { f(y) + d(x,y)^2 / (2 lambda) },
// sup-convolution g^mu = -(-g)_mu, and the double regularization
// (f_lambda)^mu, computed by localized derivative-free minimization in the
// exponential chart at x.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <utility>
#include <vector>

#include "renv/core.hpp"
#include "renv/field.hpp"
#include "renv/manifold.hpp"

namespace renv {

struct SolverConfig {
  int n_r = 16;          // radial grid count
  int n_dir = 32;        // direction count of the angular grid
  int refine_iters = 60; // shrinking coordinate-search iterations
  double shrink = 0.5;   // step shrink factor when no move improves
  double tol = 1e-10;    // value tolerance
  unsigned long long seed = kDefaultSeed;
  bool memoize = false;  // opt-in cache for nested envelope evaluations
};

enum class LocalizationMode { Auto, Bounded, Lipschitz, Quadratic };

// -- localization -------------------------------------------------------------

// Radius of a ball around x guaranteed to contain the minimizer of
// f(y) + d(x,y)^2/(2 lambda), derived from whichever regularity metadata the
// field carries:
//   bounded |f| <= N      ->  2 sqrt(N lambda)
//   Lipschitz Lip(f) = L  ->  2 lambda L
//   quadratic minorant    ->  ((2 f(x) + c0 + 2 c2 d(x,x0)^2) / (1 - 2 lambda c2))^{1/2},
//                             requires lambda < 1/(2 c2)
// With several modes available the smallest radius wins.
inline double localization_radius(const ScalarField& f, const Point& x, double lambda,
                                  LocalizationMode mode = LocalizationMode::Auto) {
  const FieldMeta& m = f.meta;
  const bool all = mode == LocalizationMode::Auto;
  std::optional<double> best;
  auto consider = [&best](double r) {
    if (!best || r < *best) best = r;
  };
  bool quad_blocked = false;

  if ((all || mode == LocalizationMode::Bounded) && m.bound)
    consider(2.0 * std::sqrt(*m.bound * lambda));
  else if (mode == LocalizationMode::Bounded)
    throw MissingMetadata("field '" + f.name + "' has no uniform bound");

  if ((all || mode == LocalizationMode::Lipschitz) && m.lip)
    consider(2.0 * lambda * *m.lip);
  else if (mode == LocalizationMode::Lipschitz)
    throw MissingMetadata("field '" + f.name + "' has no Lipschitz constant");

  if ((all || mode == LocalizationMode::Quadratic) && m.quad_minor) {
    const QuadBound& q = *m.quad_minor;
    if (2.0 * lambda * q.c2 >= 1.0) {
      if (mode == LocalizationMode::Quadratic)
        throw LambdaTooLarge("quadratic localization needs lambda < 1/(2 c2)");
      quad_blocked = true;
    } else {
      double d0 = f.M->dist(x, q.anchor);
      double num = 2.0 * f(x) + q.c0 + 2.0 * q.c2 * d0 * d0;
      consider(std::sqrt(std::max(0.0, num) / (1.0 - 2.0 * lambda * q.c2)));
    }
  } else if (mode == LocalizationMode::Quadratic) {
    throw MissingMetadata("field '" + f.name + "' has no quadratic minorant");
  }

  if (!best) {
    if (quad_blocked) throw LambdaTooLarge("quadratic localization needs lambda < 1/(2 c2)");
    throw MissingMetadata("field '" + f.name + "' carries no localization metadata");
  }
  return *best;
}

// -- chart minimizer -----------------------------------------------------------

namespace detail {

// Deterministic unit directions in chart dimension 1, 2 or 3.
inline std::vector<Vec> chart_directions(int dim, int n_dir) {
  std::vector<Vec> dirs;
  if (dim == 1) {
    dirs.push_back(Vec{1.0});
    dirs.push_back(Vec{-1.0});
  } else if (dim == 2) {
    for (int j = 0; j < n_dir; ++j) {
      double th = 2.0 * M_PI * (j + 0.5) / n_dir;
      dirs.push_back(Vec{std::cos(th), std::sin(th)});
    }
  } else if (dim == 3) {
    // Fibonacci sphere: near-uniform without any randomness.
    constexpr double kGolden = 2.3999632297286533;  // 2*pi*(1 - 1/phi)
    for (int j = 0; j < n_dir; ++j) {
      double z = 1.0 - (2.0 * j + 1.0) / n_dir;
      double r = std::sqrt(std::max(0.0, 1.0 - z * z));
      double th = kGolden * j;
      dirs.push_back(Vec{r * std::cos(th), r * std::sin(th), z});
    }
  } else {
    throw DomainError("chart minimization supports dimension <= 3");
  }
  return dirs;
}

// Ordering used everywhere a winner must be picked: value, then chart norm,
// then lexicographic coordinates. Total and data-independent, so repeated
// runs pick identical argmins.
inline bool chart_less(double va, const Vec& ua, double vb, const Vec& ub) {
  if (va != vb) return va < vb;
  double na = enorm(ua), nb = enorm(ub);
  if (na != nb) return na < nb;
  int n = std::min(ua.size(), ub.size());
  for (int i = 0; i < n; ++i)
    if (ua[i] != ub[i]) return ua[i] < ub[i];
  return false;
}

inline void clamp_to_ball(Vec& u, double radius) {
  double n = enorm(u);
  if (n > radius && n > 0.0) {
    double s = radius / n;
    for (int i = 0; i < u.size(); ++i) u[i] *= s;
  }
}

}  // namespace detail

struct BallMinimum {
  Vec arg;            // chart coordinates of the minimizer
  double value = kInf;
  long long evals = 0;
};

// Two-stage deterministic minimization of G over the closed chart ball of the
// given radius: a polar grid (n_r radii per direction plus the center), then
// shrinking coordinate search started from the best three grid candidates.
inline BallMinimum minimize_over_ball(const std::function<double(const Vec&)>& G, int dim,
                                      double radius, const SolverConfig& cfg = {}) {
  long long evals = 0;
  auto eval = [&](const Vec& u) {
    ++evals;
    return G(u);
  };

  Vec center = zeros(dim);
  double vc = eval(center);
  BallMinimum out;
  if (radius <= 0.0) {
    out.arg = center;
    out.value = vc;
    out.evals = evals;
    return out;
  }

  struct Cand {
    double v;
    Vec u;
  };
  std::vector<Cand> top = {{vc, center}};
  auto offer = [&top](double v, const Vec& u) {
    top.push_back({v, u});
    std::sort(top.begin(), top.end(), [](const Cand& a, const Cand& b) {
      return detail::chart_less(a.v, a.u, b.v, b.u);
    });
    if (top.size() > 3) top.resize(3);
  };

  for (const Vec& d : detail::chart_directions(dim, cfg.n_dir)) {
    for (int k = 1; k <= cfg.n_r; ++k) {
      double r = radius * k / cfg.n_r;
      Vec u = d;
      for (int i = 0; i < u.size(); ++i) u[i] *= r;
      offer(eval(u), u);
    }
  }

  Vec best_u;
  double best_v = kInf;
  for (const Cand& start : top) {
    Vec u = start.u;
    double v = start.v;
    double step = radius / cfg.n_r;
    for (int it = 0; it < cfg.refine_iters; ++it) {
      double mv = kInf;
      Vec mu;
      for (int i = 0; i < dim; ++i) {
        for (double s : {1.0, -1.0}) {
          Vec c = u;
          c[i] += s * step;
          detail::clamp_to_ball(c, radius);
          double cv = eval(c);
          if (detail::chart_less(cv, c, mv, mu)) {
            mv = cv;
            mu = c;
          }
        }
      }
      if (mv < v) {
        v = mv;
        u = mu;
      } else {
        step *= cfg.shrink;
        if (step < 1e-14 * std::max(1.0, radius)) break;
      }
    }
    if (detail::chart_less(v, u, best_v, best_u)) {
      best_v = v;
      best_u = u;
    }
  }

  out.arg = best_u;
  out.value = best_v;
  out.evals = evals;
  return out;
}

// -- envelopes ----------------------------------------------------------------

struct EnvelopeResult {
  double value = 0.0;
  Point arg;               // minimizer (inf) / maximizer (sup)
  double chart_norm = 0.0; // d(x, arg)
  double radius = 0.0;     // localization radius actually searched
  int expansions = 0;      // boundary-triggered radius doublings
  long long evals = 0;
};

inline EnvelopeResult inf_convolve(const ScalarField& f, double lambda, const Point& x,
                                   const SolverConfig& cfg = {},
                                   LocalizationMode mode = LocalizationMode::Auto) {
  if (!(lambda > 0.0)) throw ParamConstraintViolated("lambda must be positive");
  const Manifold& M = *f.M;
  const int dim = M.dim();
  const double cap = M.chart_radius(x);
  double radius = std::min(localization_radius(f, x, lambda, mode), cap);

  const std::vector<Tangent> E = M.frame(x);
  long long evals = 0;
  auto G = [&](const Vec& u) -> double {
    ++evals;
    try {
      Point y = M.chart_point(x, E, u);
      return f(y) + edot(u, u) / (2.0 * lambda);
    } catch (const Error&) {
      return kInf;  // outside the chart/working region: never the minimum
    }
  };

  // If the minimizer lands on the search boundary the localization ball was
  // too optimistic (or the metadata too loose): grow it, within the chart cap.
  BallMinimum best;
  int expansions = 0;
  for (;;) {
    best = minimize_over_ball(G, dim, radius, cfg);
    bool on_boundary = radius > 0.0 && enorm(best.arg) >= 0.98 * radius;
    if (!on_boundary || radius >= cap || expansions >= 3) break;
    radius = std::min(2.0 * radius, cap);
    ++expansions;
  }

  EnvelopeResult r;
  r.value = best.value;
  r.arg = M.chart_point(x, E, best.arg);
  r.chart_norm = enorm(best.arg);
  r.radius = radius;
  r.expansions = expansions;
  r.evals = evals;
  return r;
}

inline EnvelopeResult sup_convolve(const ScalarField& g, double mu, const Point& x,
                                   const SolverConfig& cfg = {},
                                   LocalizationMode mode = LocalizationMode::Auto) {
  EnvelopeResult r = inf_convolve(negate(g), mu, x, cfg, mode);
  r.value = -r.value;
  return r;
}

// f_lambda as a ScalarField, with the metadata the envelope provably keeps:
//   |f| <= N            ->  |f_lambda| <= N
//   Lip(f) = L          ->  Lip(f_lambda) <= L
//   f <= (c0+c2 d^2)/2  ->  f_lambda <= (c0 + c2/(1+c2 lambda) d^2)/2
//                           (restrict the infimum to the geodesic toward the anchor)
//   f >= -(c0+c2 d^2)/2 ->  f_lambda >= -(c0 + 2 c2 d^2)/2 for lambda < 1/(2 c2)
inline ScalarField moreau_field(const ScalarField& f, double lambda,
                                const SolverConfig& cfg = {},
                                LocalizationMode mode = LocalizationMode::Auto) {
  ScalarField r;
  r.M = f.M;
  r.name = f.name + "_env";
  if (cfg.memoize) {
    auto cache = std::make_shared<std::map<std::array<long long, Vec::kCap>, double>>();
    r.eval = [f, lambda, cfg, mode, cache](const Point& p) {
      std::array<long long, Vec::kCap> key{};
      for (int i = 0; i < p.x.size(); ++i) key[i] = std::llround(p.x[i] / 1e-4);
      auto it = cache->find(key);
      if (it != cache->end()) return it->second;
      double v = inf_convolve(f, lambda, p, cfg, mode).value;
      (*cache)[key] = v;
      return v;
    };
  } else {
    r.eval = [f, lambda, cfg, mode](const Point& p) {
      return inf_convolve(f, lambda, p, cfg, mode).value;
    };
  }
  r.meta.bound = f.meta.bound;
  r.meta.lip = f.meta.lip;
  if (f.meta.quad_major) {
    QuadBound q = *f.meta.quad_major;
    q.c2 = q.c2 / (1.0 + q.c2 * lambda);
    r.meta.quad_major = q;
  }
  if (f.meta.quad_minor && 2.0 * lambda * f.meta.quad_minor->c2 < 1.0) {
    const QuadBound& q = *f.meta.quad_minor;
    r.meta.quad_minor = QuadBound{q.c0, 2.0 * q.c2, q.anchor};
  }
  return r;
}

struct LasryLionsResult {
  double value = 0.0;
  Point sup_arg;               // z_x, maximizer of the outer stage
  double sup_chart_norm = 0.0; // d(x, z_x)
  long long outer_evals = 0;
};

// (f_lambda)^mu(x). Requires mu <= lambda/(2q) with q > 1; the outer stage
// localizes through the metadata inherited by moreau_field.
inline LasryLionsResult lasry_lions(const ScalarField& f, double lambda, double mu, double q,
                                    const Point& x, const SolverConfig& cfg = {},
                                    LocalizationMode mode = LocalizationMode::Auto) {
  if (!(q > 1.0)) throw ParamConstraintViolated("q must exceed 1");
  if (!(mu > 0.0)) throw ParamConstraintViolated("mu must be positive");
  if (mu > lambda / (2.0 * q) * (1.0 + 1e-12))
    throw ParamConstraintViolated("mu must satisfy mu <= lambda/(2q)");
  ScalarField F = moreau_field(f, lambda, cfg, mode);
  EnvelopeResult outer = sup_convolve(F, mu, x, cfg, mode);
  LasryLionsResult r;
  r.value = outer.value;
  r.sup_arg = outer.arg;
  r.sup_chart_norm = outer.chart_norm;
  r.outer_evals = outer.evals;
  return r;
}

}  // namespace renv
