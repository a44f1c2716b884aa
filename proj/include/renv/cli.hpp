// Command-line front end: flag/config-file parsing into a RunConfig, the
// subcommand dispatcher, and the CSV/JSON emitters. Exit codes: 0 all checks
// pass, 1 at least one emitted row failed (reports still written), 2 usage or
// constraint error at parse time, 3 internal evaluation error.
#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "renv/analysis.hpp"
#include "renv/conformal.hpp"
#include "renv/core.hpp"
#include "renv/envelope.hpp"
#include "renv/field.hpp"
#include "renv/manifold.hpp"
#include "renv/report.hpp"
#include "renv/theorems.hpp"

namespace renv {

struct RunConfig {
  std::string subcommand;
  std::string target;  // verify/counterexample/sweep selector

  std::string manifold = "hyperbolic";
  std::string factor_a = "sphere";  // product factors
  std::string factor_b = "sphere";
  int dim = 2;
  double K = 0.0;  // curvature parameter; 0 means the kind's default (+1 / -1)

  std::string field = "dist2";
  double field_param = 0.0;

  std::vector<double> lambdas;  // empty means the subcommand default grid
  double mu = -1.0;             // < 0: no sup stage / derived as lambda/(2q)
  double q = 2.0;

  // lemma / suite parameters
  double K0 = 1.0;
  double C = 1.0;
  double B_override = -1.0;
  double R = 1.0;
  double C0 = 1.0;
  double b0_scale = 1.0;
  double constant_scale = 1.0;

  double point_d = 1.0;                      // eval point: chart offset along e1
  std::vector<double> distances{0.5, 1.0, 2.0};  // counterexample sample distances
  int samples = 1000;
  int pairs = 40;

  unsigned long long seed = kDefaultSeed;
  std::string out;              // output path; empty -> derived name in cwd
  std::string format = "csv";   // csv | json
};

// -- output ------------------------------------------------------------------

// Appends rows to the named CSV, writing the header only when the file is new
// or empty. Binary mode keeps the line endings LF everywhere.
inline void emit_series(const std::string& path, const std::vector<Row>& rows) {
  std::error_code ec;
  auto size = std::filesystem::file_size(path, ec);
  bool need_header = ec || size == 0;
  std::ofstream os(path, std::ios::app | std::ios::binary);
  if (!os) throw std::runtime_error("cannot open output file: " + path);
  if (need_header) os << kCsvHeader << "\n";
  for (const Row& r : rows) write_csv_row(os, r);
  os.flush();
  if (!os) throw std::runtime_error("write failed: " + path);
}

inline nlohmann::ordered_json report_to_json(const CheckReport& rep) {
  nlohmann::ordered_json j;
  j["title"] = rep.title;
  j["params"] = rep.params;
  j["passed"] = rep.passed;
  j["attempted"] = rep.attempted;
  j["evaluated"] = rep.evaluated;
  j["worst"] = rep.worst;
  j["witness"] = rep.witness;
  j["rows"] = nlohmann::ordered_json::array();
  for (const Row& r : rep.rows) j["rows"].push_back(row_to_json(r));
  return j;
}

// -- manifold construction -----------------------------------------------------

struct Space {
  std::vector<std::unique_ptr<Manifold>> owned;  // product factors, then wrapper
  const Manifold* M = nullptr;
  Point x0;
};

namespace detail {

inline std::unique_ptr<Manifold> make_kind(const std::string& kind, int dim, double K) {
  if (kind == "euclidean") return std::make_unique<Euclidean>(dim);
  if (kind == "sphere") return std::make_unique<Sphere>(dim, K == 0.0 ? 1.0 : std::abs(K));
  if (kind == "hyperbolic")
    return std::make_unique<Hyperbolic>(dim, K == 0.0 ? -1.0 : -std::abs(K));
  if (kind == "warped-halfplane") return std::make_unique<WarpedHalfPlane>();
  throw DomainError("unknown manifold kind: " + kind);
}

inline Point kind_base_point(const Manifold& M, const std::string& kind) {
  if (kind == "euclidean") return M.point(zeros(M.ambient_dim()));
  if (kind == "sphere" || kind == "hyperbolic") {
    double rho = 1.0 / std::sqrt(std::max(M.curvature_bound(), 1e-300));
    Vec v = zeros(M.ambient_dim());
    v[M.ambient_dim() - 1] = rho;
    return M.point(v);
  }
  if (kind == "warped-halfplane") return M.point(Vec{0.0, 1.0});
  throw DomainError("unknown manifold kind: " + kind);
}

}  // namespace detail

inline Space make_space(const RunConfig& cfg) {
  Space s;
  if (cfg.manifold == "product") {
    s.owned.push_back(detail::make_kind(cfg.factor_a, cfg.dim, cfg.K));
    s.owned.push_back(detail::make_kind(cfg.factor_b, cfg.dim, cfg.K));
    auto prod = std::make_unique<Product>(s.owned[0].get(), s.owned[1].get());
    Point xa = detail::kind_base_point(*s.owned[0], cfg.factor_a);
    Point xb = detail::kind_base_point(*s.owned[1], cfg.factor_b);
    s.x0 = prod->join(xa, xb);
    s.M = prod.get();
    s.owned.push_back(std::move(prod));
    return s;
  }
  s.owned.push_back(detail::make_kind(cfg.manifold, cfg.dim, cfg.K));
  s.M = s.owned[0].get();
  s.x0 = detail::kind_base_point(*s.M, cfg.manifold);
  return s;
}

// -- parsing -------------------------------------------------------------------

inline std::vector<double> effective_lambdas(const RunConfig& cfg) {
  if (!cfg.lambdas.empty()) return cfg.lambdas;
  if (cfg.subcommand == "converge") return {1.0, 0.5, 0.25, 0.125};
  if (cfg.subcommand == "counterexample" && cfg.target == "warped") return {0.05};
  if (cfg.subcommand == "verify" && cfg.target == "regularization")
    return {0.04, 0.02, 0.01};
  return {1.0};
}

// Populates the CLI11 app. All value options live on the top-level app and
// fall through from the subcommands, so `renv eval --lambda 1` and
// `renv --lambda 1 eval` both parse.
inline void build_app(CLI::App& app, RunConfig& cfg) {
  app.description("Inf/sup-convolution envelopes and regularization checks on model spaces");
  app.set_config("--config", "", "line-oriented `key = value` configuration file");
  app.fallthrough();

  app.add_option("--manifold", cfg.manifold,
                 "euclidean | sphere | hyperbolic | warped-halfplane | product")
      ->capture_default_str();
  app.add_option("--factor-a", cfg.factor_a, "first product factor kind")
      ->capture_default_str();
  app.add_option("--factor-b", cfg.factor_b, "second product factor kind")
      ->capture_default_str();
  app.add_option("--dim", cfg.dim, "manifold dimension")->capture_default_str();
  app.add_option("--K", cfg.K, "curvature parameter (0 = kind default)")
      ->capture_default_str();
  app.add_option("--field", cfg.field, "dist2 | dist | truncmin | bump | const")
      ->capture_default_str();
  app.add_option("--field-param", cfg.field_param, "field shape parameter")
      ->capture_default_str();
  app.add_option("--lambda", cfg.lambdas, "inf-convolution parameter(s)");
  app.add_option("--mu", cfg.mu, "sup-convolution parameter (requires mu <= lambda/2q)");
  app.add_option("--q", cfg.q, "regularization margin factor (> 1)")->capture_default_str();
  app.add_option("--K0", cfg.K0, "curvature bound for radius/lemma jobs")
      ->capture_default_str();
  app.add_option("--C", cfg.C, "lemma coefficient C")->capture_default_str();
  app.add_option("--B", cfg.B_override, "override lemma coefficient B (default q*A)");
  app.add_option("--R", cfg.R, "nonpositive-lemma working radius")->capture_default_str();
  app.add_option("--C0", cfg.C0, "nonpositive-lemma coefficient C0")->capture_default_str();
  app.add_option("--b0-scale", cfg.b0_scale, "scale on the derived B0 (robustness knob)")
      ->capture_default_str();
  app.add_option("--constant-scale", cfg.constant_scale,
                 "scale on the semiconvexity constant q/(2mu) (sensitivity knob)")
      ->capture_default_str();
  app.add_option("--point-d", cfg.point_d, "evaluation point: chart offset along e1")
      ->capture_default_str();
  app.add_option("--distances", cfg.distances, "counterexample sample distances");
  app.add_option("--samples", cfg.samples, "sampling budget")->capture_default_str();
  app.add_option("--pairs", cfg.pairs, "midpoint pairs per ball")->capture_default_str();
  app.add_option("--seed", cfg.seed, "RNG seed (RENV_SEED as fallback)")
      ->envname("RENV_SEED")
      ->capture_default_str();
  app.add_option("--out", cfg.out, "output path (default: derived name in cwd)");
  app.add_option("--format", cfg.format, "csv | json")->capture_default_str();

  app.require_subcommand(1);
  CLI::App* eval = app.add_subcommand("eval", "evaluate f_lambda (and (f_lambda)^mu)");
  CLI::App* conv = app.add_subcommand("converge", "grid error of f_lambda vs f per lambda");
  CLI::App* verify = app.add_subcommand("verify", "run a verification suite");
  verify->add_option("suite", cfg.target,
                     "convexity-lemma | nonpositive-lemma | regularization | "
                     "envelope-properties")
      ->required();
  CLI::App* ce = app.add_subcommand("counterexample", "run an instructive example");
  ce->add_option("example", cfg.target, "hyperbolic | warped")->required();
  CLI::App* sweep = app.add_subcommand("sweep", "parameter study series");
  sweep->add_option("study", cfg.target, "order-fit | radius")->required();
  for (CLI::App* sub : {eval, conv, verify, ce, sweep}) sub->fallthrough();
}

// Validation shared by parse_config and the tests: constraint violations are
// usage errors (exit 2), matching the Main Theorem's mu <= lambda/(2q) window.
inline void validate_config(RunConfig& cfg, const CLI::App& app) {
  for (const CLI::App* sub : app.get_subcommands()) cfg.subcommand = sub->get_name();
  if (cfg.format != "csv" && cfg.format != "json")
    throw CLI::ValidationError("--format must be csv or json");
  if (!(cfg.q > 1.0)) throw CLI::ValidationError("--q must exceed 1");
  auto require_target = [&](std::initializer_list<const char*> allowed) {
    for (const char* a : allowed)
      if (cfg.target == a) return;
    throw CLI::ValidationError("unknown " + cfg.subcommand + " target: " + cfg.target);
  };
  if (cfg.subcommand == "verify")
    require_target({"convexity-lemma", "nonpositive-lemma", "regularization",
                    "envelope-properties"});
  if (cfg.subcommand == "counterexample") require_target({"hyperbolic", "warped"});
  if (cfg.subcommand == "sweep") require_target({"order-fit", "radius"});
  if (cfg.mu > 0.0) {
    for (double lam : effective_lambdas(cfg)) {
      if (cfg.mu > lam / (2.0 * cfg.q) * (1.0 + 1e-12))
        throw CLI::ValidationError("mu = " + format_double(cfg.mu) +
                                   " violates mu <= lambda/(2q) = " +
                                   format_double(lam / (2.0 * cfg.q)));
    }
  }
}

// -- subcommand implementations ---------------------------------------------------

namespace detail {

inline Point offset_point(const Manifold& M, const Point& x0, double d) {
  Vec u = zeros(M.dim());
  u[0] = d;
  return M.chart_point(x0, M.frame(x0), u);
}

inline CheckReport run_eval(const RunConfig& cfg) {
  Space s = make_space(cfg);
  ScalarField f = field_library(cfg.field, *s.M, s.x0, cfg.field_param);
  Point x = offset_point(*s.M, s.x0, cfg.point_d);
  SolverConfig solver;
  solver.seed = cfg.seed;

  CheckReport rep;
  rep.title = "eval";
  rep.params = "field=" + cfg.field + " point_d=" + format_double(cfg.point_d);
  double fx = f(x);
  const std::vector<double> lams = effective_lambdas(cfg);
  for (size_t i = 0; i < lams.size(); ++i) {
    double lam = lams[i];
    EnvelopeResult er = inf_convolve(f, lam, x, solver);
    rep.add_info(make_row(rep.title, s.M->name(), lam, 0, cfg.q, cfg.seed,
                          "moreau_l" + std::to_string(i), er.value, fx, 0.0));
    if (cfg.mu > 0.0) {
      LasryLionsResult ll = lasry_lions(f, lam, cfg.mu, cfg.q, x, solver);
      rep.add_info(make_row(rep.title, s.M->name(), lam, cfg.mu, cfg.q, cfg.seed,
                            "lasry_lions_l" + std::to_string(i), ll.value, fx, 0.0));
    }
  }
  return rep;
}

inline CheckReport run_converge(const RunConfig& cfg) {
  Space s = make_space(cfg);
  ScalarField f = field_library(cfg.field, *s.M, s.x0, cfg.field_param);
  SolverConfig solver;
  solver.seed = cfg.seed;

  CheckReport rep;
  rep.title = "converge";
  rep.params = "field=" + cfg.field + " seed=" + std::to_string(cfg.seed);
  std::vector<Point> grid = sample_grid(*s.M, s.x0, 0.1, 2.0);
  if (static_cast<int>(grid.size()) > cfg.samples) grid.resize(cfg.samples);

  std::vector<double> lams = effective_lambdas(cfg);
  double prev = kInf;
  for (size_t i = 0; i < lams.size(); ++i) {
    double lam = lams[i];
    double err = 0.0;
    for (size_t p = 0; p < grid.size(); ++p) {
      double fl = inf_convolve(f, lam, grid[p], solver).value;
      double fp = f(grid[p]);
      err = std::max(err, std::abs(fp - fl));
      rep.add_info(make_row(rep.title, s.M->name(), lam, 0, cfg.q, cfg.seed,
                            "l" + std::to_string(i) + "_p" + std::to_string(p), fl, fp, 0.0));
    }
    rep.add_info(make_row(rep.title, s.M->name(), lam, 0, cfg.q, cfg.seed,
                          "max_err_l" + std::to_string(i), err, 0.0, 0.0));
    if (i > 0)
      rep.add(bound_row(rep.title, s.M->name(), lam, 0, cfg.q, cfg.seed,
                        "err_decrease_l" + std::to_string(i), err, prev * (1.0 - 1e-9)));
    prev = err;
  }
  return rep;
}

inline CheckReport run_verify(const RunConfig& cfg) {
  if (cfg.target == "convexity-lemma") {
    RunConfig mcfg = cfg;
    if (cfg.manifold == "hyperbolic" && cfg.K == 0.0) mcfg.manifold = "sphere";
    mcfg.K = cfg.K0;
    Space s = make_space(mcfg);
    AdmissibleR ar = admissible_R(cfg.q, std::max(s.M->curvature_bound(), 1e-12));
    Point y0 = offset_point(*s.M, s.x0, 0.5 * ar.R);
    return verify_convexity_lemma(*s.M, cfg.q, cfg.C, s.x0, y0, cfg.samples, cfg.seed,
                                  cfg.B_override);
  }
  if (cfg.target == "nonpositive-lemma")
    return verify_nonpositive_lemma(cfg.R, cfg.C0, cfg.samples, cfg.seed, cfg.b0_scale);
  if (cfg.target == "regularization") {
    RunConfig mcfg = cfg;
    if (cfg.manifold == "hyperbolic" && cfg.K == 0.0) mcfg.manifold = "sphere";
    mcfg.K = cfg.K == 0.0 ? cfg.K0 : cfg.K;
    if (cfg.field == "dist2") mcfg.field = "bump";
    Space s = make_space(mcfg);
    ScalarField f = field_library(mcfg.field, *s.M, s.x0, cfg.field_param);
    RegularizationOptions opt;
    opt.lambda_grid = effective_lambdas(cfg);
    opt.q = cfg.q;
    opt.n_pairs = cfg.pairs;
    opt.seed = cfg.seed;
    opt.constant_scale = cfg.constant_scale;
    return verify_regularization(f, s.x0, opt);
  }
  if (cfg.target == "envelope-properties") {
    Space s = make_space(cfg);
    ScalarField f = field_library(cfg.field, *s.M, s.x0, cfg.field_param);
    ScalarField h = affine_combination(f, 1.0, bump_field(*s.M, s.x0, 0.35), 1.0);
    EnvelopePropertyOptions opt;
    opt.seed = cfg.seed;
    if (cfg.field == "dist2") {
      opt.inf_f = 0.0;
      opt.convergence_ratio = true;
      double K = 0.0;
      opt.convexity_preservation = s.M->constant_curvature(&K) && K <= 0.0;
    }
    return verify_envelope_properties(f, h, s.x0, opt);
  }
  throw CLI::ValidationError("unknown verify suite: " + cfg.target);
}

inline CheckReport run_counterexample(const RunConfig& cfg) {
  if (cfg.target == "hyperbolic") {
    double lam = effective_lambdas(cfg)[0];
    double mu = cfg.mu > 0.0 ? cfg.mu : lam / (2.0 * cfg.q);
    SolverConfig solver;
    solver.seed = cfg.seed;
    return counterexample_hyperbolic(lam, mu, cfg.distances, solver);
  }
  if (cfg.target == "warped") {
    WarpedOptions opt;
    opt.lambda = effective_lambdas(cfg)[0];
    opt.mu = cfg.mu > 0.0 ? cfg.mu : opt.lambda / (2.0 * cfg.q);
    opt.seed = cfg.seed;
    return counterexample_warped(opt);
  }
  throw CLI::ValidationError("unknown counterexample: " + cfg.target);
}

inline CheckReport run_sweep(const RunConfig& cfg) {
  CheckReport rep;
  if (cfg.target == "order-fit") {
    Space s = make_space(cfg);
    rep.title = "order-fit";
    rep.params = "manifold=" + s.M->name();
    std::vector<Tangent> E = s.M->frame(s.x0);
    std::vector<double> ts;
    for (int i = 0; i < 10; ++i) ts.push_back(1e-3 * std::pow(100.0, i / 9.0));
    for (bool inverse : {false, true}) {
      const char* tag = inverse ? "invexp" : "dexp";
      for (size_t i = 0; i < ts.size(); ++i) {
        Tangent v = E[0];
        v.v *= ts[i];
        v.norm = ts[i];
        double gap = inverse ? invexp_transport_gap(*s.M, s.x0, v, true)
                             : dexp_transport_gap(*s.M, s.x0, v, true);
        // (t, gap) pair: t rides in the lambda column
        Row r = make_row(rep.title, s.M->name(), ts[i], 0, 0, cfg.seed,
                         std::string(tag) + "_gap_t" + std::to_string(i), gap, 0.0, 0.0);
        rep.add_info(std::move(r));
      }
      double slope = gap_order_fit(*s.M, s.x0, E[0], ts, inverse, true);
      rep.add(make_row(rep.title, s.M->name(), 0, 0, 0, cfg.seed,
                       std::string(tag) + "_slope", slope, 2.0, 0.05));
    }
    return rep;
  }
  if (cfg.target == "radius") {
    rep.title = "radius";
    rep.params = "bisection table";
    const std::vector<double> qs{1.5, 2.0, 3.0, 4.0, 8.0};
    const std::vector<double> k0s{0.25, 0.5, 1.0, 2.0, 4.0};
    for (size_t i = 0; i < qs.size(); ++i) {
      double prev_k = kInf;
      for (size_t j = 0; j < k0s.size(); ++j) {
        double R = admissible_R(qs[i], k0s[j]).R;
        std::string id = "R_q" + std::to_string(i) + "_k" + std::to_string(j);
        rep.add_info(make_row(rep.title, "-", 0, 0, qs[i], cfg.seed, id, R, 0.0, 0.0));
        rep.add(bound_row(rep.title, "-", 0, 0, qs[i], cfg.seed, id + "_dec_in_K0", R,
                          prev_k * (1.0 + 1e-12)));
        prev_k = R;
        if (i > 0) {
          double below = admissible_R(qs[i - 1], k0s[j]).R;
          rep.add(ge_row(rep.title, "-", 0, 0, qs[i], cfg.seed, id + "_inc_in_q", R,
                         below * (1.0 - 1e-12)));
        }
      }
    }
    return rep;
  }
  throw CLI::ValidationError("unknown sweep study: " + cfg.target);
}

}  // namespace detail

// -- driver --------------------------------------------------------------------

inline int run(const RunConfig& cfg) {
  CheckReport rep;
  if (cfg.subcommand == "eval") rep = detail::run_eval(cfg);
  else if (cfg.subcommand == "converge") rep = detail::run_converge(cfg);
  else if (cfg.subcommand == "verify") rep = detail::run_verify(cfg);
  else if (cfg.subcommand == "counterexample") rep = detail::run_counterexample(cfg);
  else if (cfg.subcommand == "sweep") rep = detail::run_sweep(cfg);
  else throw std::runtime_error("unknown subcommand: " + cfg.subcommand);

  std::string ext = cfg.format == "json" ? ".json" : ".csv";
  std::string path = cfg.out.empty()
                         ? cfg.subcommand + (cfg.target.empty() ? "" : "-" + cfg.target) + ext
                         : cfg.out;
  if (cfg.format == "json") {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open output file: " + path);
    os << report_to_json(rep).dump(2) << "\n";
  } else {
    std::error_code ec;
    std::filesystem::remove(path, ec);  // run() owns the file; series appends are emit_series
    emit_series(path, rep.rows);
  }

  bool any_fail = false;
  for (const Row& r : rep.rows) any_fail = any_fail || r.status == "fail";
  std::cerr << rep.title << ": " << (any_fail ? "FAIL" : "ok") << " (" << rep.rows.size()
            << " rows -> " << path << ")\n";
  return any_fail ? 1 : 0;
}

// Full entry point: parse (exit 2 on usage/constraint errors), run (exit 1 on
// failed checks), map internal evaluation errors to exit 3 with a diagnostic.
inline int run_main(int argc, const char* const* argv) {
  RunConfig cfg;
  CLI::App app{"renv"};
  build_app(app, cfg);
  try {
    app.parse(argc, argv);
    validate_config(cfg, app);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);  // prints help, exit 0
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }
  try {
    return run(cfg);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
}

}  // namespace renv
