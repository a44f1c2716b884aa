// Result rows and their CSV / JSON serialization. Every numeric is printed
// with %.17g and lines end in \n so repeated runs with the same seed produce
// byte-identical output.
#pragma once

#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"
#include "renv/core.hpp"

namespace renv {

struct Row {
  std::string suite;
  std::string manifold;
  double lambda = 0.0;
  double mu = 0.0;
  double q = 0.0;
  unsigned long long seed = 0;
  std::string point_id;
  double value_numeric = 0.0;
  double value_reference = 0.0;
  double abs_err = 0.0;
  double rel_err = 0.0;
  std::string status;  // "pass" | "fail" | "info"
};

inline Row make_row(std::string suite, std::string manifold, double lambda, double mu, double q,
                    unsigned long long seed, std::string point_id, double numeric,
                    double reference, double tol) {
  Row r;
  r.suite = std::move(suite);
  r.manifold = std::move(manifold);
  r.lambda = lambda;
  r.mu = mu;
  r.q = q;
  r.seed = seed;
  r.point_id = std::move(point_id);
  r.value_numeric = numeric;
  r.value_reference = reference;
  r.abs_err = std::abs(numeric - reference);
  // Relative error falls back to the absolute one when the reference is 0
  // (info rows often carry measurements with no meaningful reference).
  r.rel_err = reference != 0.0 ? r.abs_err / std::abs(reference) : r.abs_err;
  r.status = r.abs_err <= tol * std::max(1.0, std::abs(reference)) ? "pass" : "fail";
  return r;
}

// Pass iff the relative error stays within tol (two-sided match).
inline Row make_rel_row(std::string suite, std::string manifold, double lambda, double mu,
                        double q, unsigned long long seed, std::string point_id, double numeric,
                        double reference, double rel_tol) {
  Row r = make_row(std::move(suite), std::move(manifold), lambda, mu, q, seed,
                   std::move(point_id), numeric, reference, 0.0);
  r.status = r.rel_err <= rel_tol ? "pass" : "fail";
  return r;
}

// Pass iff measured <= threshold (one-sided upper bound).
inline Row bound_row(std::string suite, std::string manifold, double lambda, double mu, double q,
                     unsigned long long seed, std::string point_id, double measured,
                     double threshold) {
  Row r = make_row(std::move(suite), std::move(manifold), lambda, mu, q, seed,
                   std::move(point_id), measured, threshold, 0.0);
  r.status = measured <= threshold ? "pass" : "fail";
  return r;
}

// Pass iff measured >= threshold (one-sided lower bound).
inline Row ge_row(std::string suite, std::string manifold, double lambda, double mu, double q,
                  unsigned long long seed, std::string point_id, double measured,
                  double threshold) {
  Row r = make_row(std::move(suite), std::move(manifold), lambda, mu, q, seed,
                   std::move(point_id), measured, threshold, 0.0);
  r.status = measured >= threshold ? "pass" : "fail";
  return r;
}

inline const char* kCsvHeader =
    "suite,manifold,lambda,mu,q,seed,point_id,value_numeric,value_reference,abs_err,rel_err,"
    "status";

inline void write_csv_row(std::ostream& os, const Row& r) {
  os << r.suite << ',' << r.manifold << ',' << format_double(r.lambda) << ','
     << format_double(r.mu) << ',' << format_double(r.q) << ',' << r.seed << ',' << r.point_id
     << ',' << format_double(r.value_numeric) << ',' << format_double(r.value_reference) << ','
     << format_double(r.abs_err) << ',' << format_double(r.rel_err) << ',' << r.status << "\n";
}

inline void write_csv(std::ostream& os, const std::vector<Row>& rows) {
  os << kCsvHeader << "\n";
  for (const Row& r : rows) write_csv_row(os, r);
}

inline nlohmann::ordered_json row_to_json(const Row& r) {
  nlohmann::ordered_json j;
  j["suite"] = r.suite;
  j["manifold"] = r.manifold;
  j["lambda"] = r.lambda;
  j["mu"] = r.mu;
  j["q"] = r.q;
  j["seed"] = r.seed;
  j["point_id"] = r.point_id;
  j["value_numeric"] = r.value_numeric;
  j["value_reference"] = r.value_reference;
  j["abs_err"] = r.abs_err;
  j["rel_err"] = r.rel_err;
  j["status"] = r.status;
  return j;
}

inline void write_json(std::ostream& os, const std::vector<Row>& rows) {
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const Row& r : rows) arr.push_back(row_to_json(r));
  os << arr.dump(2) << "\n";
}

// Aggregate outcome of a verification battery: per-sample rows plus the
// worst violation seen and the point that produced it.
struct CheckReport {
  std::string title;
  std::vector<Row> rows;
  bool passed = true;
  long long attempted = 0;
  long long evaluated = 0;
  double worst = -kInf;  // largest violation (negative = inequality held with margin)
  std::string witness;   // point_id of the worst sample
  std::string params;    // echoed parameters

  void note(double violation, const std::string& point_id) {
    ++evaluated;
    if (violation > worst) {
      worst = violation;
      witness = point_id;
    }
  }
  void add(Row r) {
    if (r.status == "fail") passed = false;
    rows.push_back(std::move(r));
  }
  void add_info(Row r) {
    r.status = "info";
    rows.push_back(std::move(r));
  }
  void merge(const CheckReport& other) {
    passed = passed && other.passed;
    attempted += other.attempted;
    evaluated += other.evaluated;
    if (other.worst > worst) {
      worst = other.worst;
      witness = other.witness;
    }
    rows.insert(rows.end(), other.rows.begin(), other.rows.end());
  }
};

}  // namespace renv
