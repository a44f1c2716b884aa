// Acceptance gate: one self-contained check per numbered criterion, each
// printing its measurements and a single PASS/FAIL verdict line. Run all with
// no arguments or a single one with --criterion N. Exit 0 iff every selected
// criterion passed.
//
// Criteria 1 and 2 are expected to FAIL: the stated closed-form coefficients
// for the hyperbolic example solve the d^2/lambda normalization of the
// envelope, while this library (and the checks here) define inf-convolution
// with the d^2/(2 lambda) penalty throughout. Both criteria print the
// matching one-variable reduction alongside, which the numerics reproduce to
// ~1e-6; the discrepancy is in the quoted constants, not the solver.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "renv/analysis.hpp"
#include "renv/cli.hpp"
#include "renv/conformal.hpp"
#include "renv/envelope.hpp"
#include "renv/field.hpp"
#include "renv/manifold.hpp"
#include "renv/theorems.hpp"

using namespace renv;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;  // one-line summary for the verdict line
};

Point offset_e1(const Manifold& M, const Point& x0, double d) {
  Vec u = zeros(M.dim());
  u[0] = d;
  return M.chart_point(x0, M.frame(x0), u);
}

Tangent tangential_dir(const Manifold& M, const Point& x, const Point& x0) {
  Tangent radial = M.log(x, x0);
  std::vector<Tangent> E = M.frame(x);
  double rn = std::max(radial.norm, 1e-300);
  double p0 = M.metric_dot(x, E[0].v, radial.v) / rn;
  double p1 = M.metric_dot(x, E[1].v, radial.v) / rn;
  Tangent t = std::abs(p0) > std::abs(p1) ? E[1] : E[0];
  double proj = std::abs(p0) > std::abs(p1) ? p1 : p0;
  Vec tv = t.v - (proj / rn) * radial.v;
  return M.tangent(x, tv);
}

double rel(double got, double want) {
  return want != 0.0 ? std::abs(got - want) / std::abs(want) : std::abs(got);
}

// --------------------------------------------------------------------------
// 1. Stated inf-convolution closed form on K=-1.

Outcome criterion1() {
  Hyperbolic H(2, -1.0);
  Point x0 = H.point(Vec{0.0, 0.0, 1.0});
  ScalarField f = dist2_field(H, x0);
  bool stated_ok = true, reduction_ok = true;
  double worst_stated = 0.0, worst_reduction = 0.0;
  for (double lam : {0.5, 1.0}) {
    double coef_stated = (2.0 + lam) / (2.0 * (1.0 + lam) * (1.0 + lam));
    double coef_1d = 1.0 / (1.0 + 2.0 * lam);
    double ratio_stated = lam / (1.0 + lam);
    double ratio_1d = 2.0 * lam / (1.0 + 2.0 * lam);
    for (double D : {0.5, 1.0, 2.0}) {
      EnvelopeResult r = inf_convolve(f, lam, offset_e1(H, x0, D));
      double coef = r.value / (D * D);
      double ratio = r.chart_norm / D;
      double rs = std::max(rel(coef, coef_stated), rel(ratio, ratio_stated));
      double r1 = std::max(rel(coef, coef_1d), rel(ratio, ratio_1d));
      stated_ok = stated_ok && rs <= 1e-3;
      reduction_ok = reduction_ok && r1 <= 1e-3;
      worst_stated = std::max(worst_stated, rs);
      worst_reduction = std::max(worst_reduction, r1);
      std::printf("  lambda=%-4g d=%-4g  coef=%.6f stated=%.6f argmin_ratio=%.6f "
                  "stated=%.6f | one-variable reduction: coef=%.6f ratio=%.6f rel<=%.1e\n",
                  lam, D, coef, coef_stated, ratio, ratio_stated, coef_1d, ratio_1d, r1);
    }
  }
  std::ostringstream d;
  d << "stated coefficient (2+l)/(2(1+l)^2) and argmin l/(1+l) miss by up to "
    << worst_stated << " relative; the d^2/(2 lambda) reduction D^2/(1+2l) with argmin "
    << "2l/(1+2l) matches to " << worst_reduction
    << (reduction_ok ? " (solver agrees with the reduction)" : " (reduction also off!)");
  return {stated_ok, d.str()};
}

// --------------------------------------------------------------------------
// 2. Stated double-envelope closed form on K=-1.

Outcome criterion2() {
  Hyperbolic H(2, -1.0);
  Point x0 = H.point(Vec{0.0, 0.0, 1.0});
  ScalarField f = dist2_field(H, x0);
  const double q = 2.0;
  bool stated_ok = true;
  double worst_stated = 0.0, worst_reduction = 0.0;
  for (double lam : {0.5, 1.0}) {
    double mu = lam / (2.0 * q);
    double lp = (1.0 + lam) * (1.0 + lam) / (2.0 + lam);
    double coef_stated = 1.0 / (2.0 * (lp - mu));
    double coef_1d = 1.0 / (1.0 + 2.0 * lam - 2.0 * mu);
    for (double D : {0.5, 1.0, 2.0}) {
      LasryLionsResult r = lasry_lions(f, lam, mu, q, offset_e1(H, x0, D));
      double coef = r.value / (D * D);
      double rs = rel(coef, coef_stated);
      double r1 = rel(coef, coef_1d);
      stated_ok = stated_ok && rs <= 5e-3;
      worst_stated = std::max(worst_stated, rs);
      worst_reduction = std::max(worst_reduction, r1);
      std::printf("  lambda=%-4g mu=%-6g d=%-4g  coef=%.6f stated=%.6f rel=%.3e | "
                  "reduction 1/(1+2l-2mu)=%.6f rel=%.3e\n",
                  lam, mu, D, coef, coef_stated, rs, coef_1d, r1);
    }
  }
  std::ostringstream d;
  d << "stated coefficient 1/(2(l'-mu)), l'=(1+l)^2/(2+l), misses by up to " << worst_stated
    << " relative; the same-normalization reduction 1/(1+2l-2mu) matches to "
    << worst_reduction;
  return {stated_ok, d.str()};
}

// --------------------------------------------------------------------------
// 3. Flat-space closed forms for both envelope stages.

Outcome criterion3() {
  Euclidean E(2);
  Point o = E.point(Vec{0.0, 0.0});
  ScalarField f = dist2_field(E, o, 0.5);
  const double lam = 0.25, q = 2.0, mu = lam / (2.0 * q);
  double worst = 0.0;
  for (int i = 0; i < 20; ++i) {
    double r = 0.15 + 0.07 * i, th = 0.7 * i;
    Point x = E.point(Vec{r * std::cos(th), r * std::sin(th)});
    double xx = edot(x.x, x.x);
    double err1 = std::abs(inf_convolve(f, lam, x).value - xx / (2.0 * (1.0 + lam)));
    double err2 =
        std::abs(lasry_lions(f, lam, mu, q, x).value - xx / (2.0 * (1.0 + lam - mu)));
    worst = std::max(worst, std::max(err1, err2));
  }
  std::printf("  20 points, lambda=%g mu=%g: worst |numeric - closed form| = %.3e\n", lam, mu,
              worst);
  std::ostringstream d;
  d << "worst absolute error " << worst << " (tolerance 1e-6)";
  return {worst <= 1e-6, d.str()};
}

// --------------------------------------------------------------------------
// 4. Quadratic decay of the dexp / dinvexp transport gaps.

Outcome criterion4() {
  Sphere S(2, 1.0);
  Hyperbolic H(2, -1.0);
  Point sx = S.point(Vec{0.0, 0.0, 1.0});
  Point hx = H.point(Vec{0.0, 0.0, 1.0});
  std::vector<double> ts;
  for (int i = 0; i < 10; ++i) ts.push_back(1e-3 * std::pow(100.0, i / 9.0));
  bool ok = true;
  std::ostringstream d;
  for (bool inverse : {false, true}) {
    double ss = gap_order_fit(S, sx, S.frame(sx)[0], ts, inverse, true);
    double hs = gap_order_fit(H, hx, H.frame(hx)[0], ts, inverse, true);
    ok = ok && ss > 1.9 && ss < 2.1 && hs > 1.9 && hs < 2.1;
    std::printf("  %s: slope sphere=%.4f hyperbolic=%.4f (want within [1.9, 2.1])\n",
                inverse ? "dinvexp" : "dexp", ss, hs);
    d << (inverse ? " inv(" : "slopes(") << ss << ", " << hs << ")";
  }
  return {ok, d.str()};
}

// --------------------------------------------------------------------------
// 5. Product-space convexity lemma on the sphere, with ablation.

Outcome criterion5() {
  Sphere S(2, 1.0);
  Point x0 = S.point(Vec{0.0, 0.0, 1.0});
  AdmissibleR ar = admissible_R(2.0, 1.0);
  Point y0 = S.chart_point(x0, S.frame(x0), Vec{0.5 * ar.R, 0.0});
  CheckReport main = verify_convexity_lemma(S, 2.0, 1.0, x0, y0, 10000);
  CheckReport ablated = verify_convexity_lemma(S, 2.0, 1.0, x0, y0, 10000, kDefaultSeed, 0.0);
  std::printf("  A=2 B=4 C=1 R=%.6f: worst violation %.3e over 10^4 midpoint pairs (%s)\n",
              ar.R, main.worst, main.passed ? "pass" : "fail");
  std::printf("  B=0 ablation: worst violation %.3e (%s, expected fail)\n", ablated.worst,
              ablated.passed ? "pass" : "fail");
  std::ostringstream d;
  d << "lemma worst violation " << main.worst << "; B=0 ablation "
    << (ablated.passed ? "unexpectedly passed" : "fails as predicted");
  return {main.passed && !ablated.passed, d.str()};
}

// --------------------------------------------------------------------------
// 6. Full regularization battery on the sphere bump field.

Outcome criterion6() {
  RunConfig cfg;
  cfg.subcommand = "verify";
  cfg.target = "regularization";
  cfg.manifold = "sphere";
  cfg.field = "bump";
  CheckReport rep = detail::run_verify(cfg);
  int fails = 0;
  for (const Row& r : rep.rows)
    if (r.status == "fail") ++fails;
  if (std::isfinite(rep.worst))
    std::printf("  %zu rows, %d failing; worst violation %.3e (witness %s)\n", rep.rows.size(),
                fails, rep.worst, rep.witness.c_str());
  else
    std::printf("  %zu rows, %d failing\n", rep.rows.size(), fails);
  std::ostringstream d;
  d << rep.rows.size() << " rows, " << fails << " failing";
  return {rep.passed, d.str()};
}

// --------------------------------------------------------------------------
// 7. Lipschitz constant of the envelope of a truncated distance.

Outcome criterion7() {
  Hyperbolic H(2, -1.0);
  Point p1 = H.point(Vec{0.0, 0.0, 1.0});
  ScalarField f = truncated_min_field(H, {p1}, 2.0);
  Point center = offset_e1(H, p1, 1.0);
  bool ok = true;
  std::ostringstream d;
  for (double lam : {0.05, 0.01}) {
    double lip = lip_estimate(moreau_field(f, lam), center, 0.8, 250);
    bool here = lip <= 1.05 && (lam > 0.01 || lip >= 0.95);
    ok = ok && here;
    std::printf("  lambda=%-5g Lip(f_lambda) ~ %.5f (<= 1.05%s)\n", lam, lip,
                lam <= 0.01 ? ", >= 0.95" : "");
    d << "Lip(" << lam << ")=" << lip << " ";
  }
  return {ok, d.str()};
}

// --------------------------------------------------------------------------
// 8. Curvature of the warped half-plane from circumference deficits.

Outcome criterion8() {
  ConformalMetric g;  // x2^{-4} warp: K = -2 x2^2
  IntegratorConfig cfg;
  double worst = 0.0;
  for (int i = 0; i < 10; ++i) {
    double x2 = 0.5 + 3.5 * i / 9.0;
    Vec p{0.3 * i, x2};
    double est = curvature_check(g, p, 1e-2, cfg);
    double want = -2.0 * x2 * x2;
    double r = rel(est, want);
    worst = std::max(worst, r);
    std::printf("  x2=%-8g K_est=%-12.6f K=-2 x2^2=%-12.6f rel=%.2e\n", x2, est, want, r);
  }
  std::ostringstream d;
  d << "worst relative deficit error " << worst << " over 10 heights (tolerance 1e-3)";
  return {worst <= 1e-3, d.str()};
}

// --------------------------------------------------------------------------
// 9. Hessian blow-up of d(.,x0)^2 with the base distance.

Outcome criterion9() {
  Hyperbolic H(2, -1.0);
  Point x0 = H.point(Vec{0.0, 0.0, 1.0});
  ScalarField f = dist2_field(H, x0);
  auto tang_hess = [&](double D) {
    Point x = offset_e1(H, x0, D);
    return hessian_quadform(f, x, tangential_dir(H, x, x0));
  };
  double h1 = tang_hess(1.0), h6 = tang_hess(6.0);
  double ratio = h6 / h1;
  double predicted = (12.0 / std::tanh(6.0)) / (2.0 / std::tanh(1.0));
  std::printf("  Hess d^2 tangential: d=1 -> %.5f, d=6 -> %.5f, ratio %.4f "
              "(closed form %.4f, gate >= 3)\n",
              h1, h6, ratio, predicted);
  std::ostringstream d;
  d << "ratio " << ratio << " vs closed form " << predicted;
  return {ratio >= 3.0, d.str()};
}

// --------------------------------------------------------------------------
// 10. Agreement of the four gradient-Lipschitz readings.

Outcome criterion10() {
  Euclidean E(2);
  Sphere S(2, 1.0);
  Hyperbolic H(2, -1.0);
  const Manifold* Ms[] = {&E, &S, &H};
  Vec bases[] = {Vec{0.0, 0.0}, Vec{0.0, 0.0, 1.0}, Vec{0.0, 0.0, 1.0}};
  double claims[] = {1.0, 1.0, 1.0 / std::tanh(1.0)};
  bool ok = true;
  std::ostringstream d;
  DiffConfig cfg;
  for (int i = 0; i < 3; ++i) {
    Point x0 = Ms[i]->point(bases[i]);
    C11Estimates est = c11_estimates(dist2_field(*Ms[i], x0, 0.5), x0, 1.0, cfg);
    double spread = est.spread();
    ok = ok && spread <= 0.15;
    std::printf("  %-10s transport=%.4f taylor=%.4f chart-grad=%.4f hess=%.4f "
                "spread=%.3f (claim %.4f)\n",
                Ms[i]->name().c_str(), est.transport_quotient, est.chart_taylor,
                est.chart_gradient, est.hessian_sup, spread, claims[i]);
    d << Ms[i]->name() << " spread=" << spread << " ";
  }
  return {ok, d.str()};
}

// --------------------------------------------------------------------------
// 11. Byte-identical CSV on re-run, across every suite kind.

Outcome criterion11() {
  namespace fs = std::filesystem;
  fs::path dir = fs::temp_directory_path() / "renv-acceptance-11";
  fs::create_directories(dir);

  struct Job {
    const char* name;
    RunConfig cfg;
  };
  std::vector<Job> jobs;
  {
    RunConfig c;
    c.subcommand = "eval";
    c.manifold = "hyperbolic";
    c.lambdas = {0.5, 1.0};
    c.mu = 0.125;
    jobs.push_back({"eval", c});
  }
  {
    RunConfig c;
    c.subcommand = "converge";
    c.manifold = "sphere";
    c.field = "bump";
    c.samples = 150;
    jobs.push_back({"converge", c});
  }
  {
    RunConfig c;
    c.subcommand = "verify";
    c.target = "convexity-lemma";
    c.manifold = "sphere";
    c.samples = 2000;
    jobs.push_back({"verify-convexity", c});
  }
  {
    RunConfig c;
    c.subcommand = "verify";
    c.target = "nonpositive-lemma";
    c.samples = 500;
    jobs.push_back({"verify-nonpositive", c});
  }
  {
    RunConfig c;
    c.subcommand = "verify";
    c.target = "envelope-properties";
    c.samples = 120;
    jobs.push_back({"verify-envelope", c});
  }
  {
    RunConfig c;
    c.subcommand = "counterexample";
    c.target = "hyperbolic";
    c.distances = {1.0};
    jobs.push_back({"counterexample-hyperbolic", c});
  }
  {
    RunConfig c;
    c.subcommand = "sweep";
    c.target = "order-fit";
    c.manifold = "sphere";
    jobs.push_back({"sweep-order-fit", c});
  }
  {
    RunConfig c;
    c.subcommand = "sweep";
    c.target = "radius";
    jobs.push_back({"sweep-radius", c});
  }

  auto slurp = [](const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream os;
    os << is.rdbuf();
    return os.str();
  };

  bool ok = true;
  std::ostringstream d;
  for (Job& j : jobs) {
    fs::path a = dir / (std::string(j.name) + "-a.csv");
    fs::path b = dir / (std::string(j.name) + "-b.csv");
    j.cfg.out = a.string();
    run(j.cfg);  // pass/fail code irrelevant here; the bytes are the subject
    j.cfg.out = b.string();
    run(j.cfg);
    std::string ba = slurp(a), bb = slurp(b);
    bool same = !ba.empty() && ba == bb;
    ok = ok && same;
    std::printf("  %-28s %zu bytes: %s\n", j.name, ba.size(),
                same ? "identical" : "DIFFER");
    if (!same) d << j.name << " differs ";
  }
  std::error_code ec;
  fs::remove_all(dir, ec);
  if (ok) d << jobs.size() << " suites re-ran byte-identically";
  return {ok, d.str()};
}

struct Criterion {
  int id;
  const char* label;
  Outcome (*fn)();
  double budget_s;  // 0 = no stated budget
};

const Criterion kCriteria[] = {
    {1, "hyperbolic inf-convolution closed form", criterion1, 10.0},
    {2, "hyperbolic double-envelope closed form", criterion2, 60.0},
    {3, "flat-space envelope closed forms", criterion3, 0.0},
    {4, "transport-gap quadratic order", criterion4, 0.0},
    {5, "sphere convexity lemma + ablation", criterion5, 30.0},
    {6, "regularization battery on the sphere bump", criterion6, 300.0},
    {7, "Lipschitz preservation for truncated distance", criterion7, 0.0},
    {8, "warped half-plane curvature", criterion8, 0.0},
    {9, "hyperbolic Hessian growth", criterion9, 0.0},
    {10, "gradient-Lipschitz cross-check", criterion10, 0.0},
    {11, "byte-identical CSV re-runs", criterion11, 0.0},
};

}  // namespace

int main(int argc, char** argv) {
  int selected = 0;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc) {
      selected = std::atoi(argv[++i]);
    } else {
      std::fprintf(stderr, "usage: %s [--criterion N]   (N in 1..11)\n", argv[0]);
      return 2;
    }
  }
  if (selected < 0 || selected > 11) {
    std::fprintf(stderr, "criterion out of range: %d\n", selected);
    return 2;
  }

  bool all_pass = true;
  for (const Criterion& c : kCriteria) {
    if (selected != 0 && c.id != selected) continue;
    std::printf("criterion %d: %s\n", c.id, c.label);
    auto t0 = std::chrono::steady_clock::now();
    Outcome out = c.fn();
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    bool in_budget = c.budget_s <= 0.0 || secs <= c.budget_s;
    bool pass = out.pass && in_budget;
    all_pass = all_pass && pass;
    std::string budget;
    if (c.budget_s > 0.0) {
      budget = " / budget " + format_double(c.budget_s) + "s";
      if (!in_budget) budget += " EXCEEDED";
    }
    std::printf("criterion %d: %s — %s [%.1fs%s]\n", c.id, pass ? "PASS" : "FAIL",
                out.detail.c_str(), secs, budget.c_str());
    std::fflush(stdout);
  }
  return all_pass ? 0 : 1;
}
