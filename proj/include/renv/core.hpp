// Small fixed-capacity vectors, deterministic RNG, and the error taxonomy
// shared by every module.
#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <initializer_list>
#include <limits>
#include <stdexcept>
#include <string>

namespace renv {

inline constexpr double kInf = std::numeric_limits<double>::infinity();
inline constexpr double kCutLocusMargin = 1e-6;  // hard guard near cut loci, metric units
inline constexpr std::uint64_t kDefaultSeed = 3735928559ull;

// ---------------------------------------------------------------------------
// Errors.  All library errors derive from Error so callers can distinguish
// library failures from std:: failures.

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Geometry was asked to invert the exponential map at or beyond the cut locus.
struct CutLocusExceeded : Error {
  using Error::Error;
};

// A point or tangent vector violates its manifold's membership constraints,
// or an operation is not defined for the requested space.
struct DomainError : Error {
  using Error::Error;
};

// A numerically integrated trajectory left the configured working region.
struct LeftWorkingRegion : Error {
  using Error::Error;
};

// The shooting (boundary value) solver failed to converge.
struct ShootingDiverged : Error {
  using Error::Error;
};

// A scalar field is missing the metadata a localization rule needs.
struct MissingMetadata : Error {
  using Error::Error;
};

// The regularization scale is too large for the available growth bound.
struct LambdaTooLarge : Error {
  using Error::Error;
};

// Parameters violate a documented constraint (e.g. mu > lambda / 2q).
struct ParamConstraintViolated : Error {
  using Error::Error;
};

// No epsilon in (0,1) satisfies the working-radius inequality system.
struct NoFeasibleEpsilon : Error {
  using Error::Error;
};

// ---------------------------------------------------------------------------
// Vec: a fixed-capacity coordinate vector.  Everything in the library lives
// in dimension <= 8 (largest case: a product of two embedded surfaces), so a
// stack array avoids allocation in the hot solver loops.

struct Vec {
  static constexpr int kCap = 8;
  std::array<double, kCap> a{};
  int n = 0;

  Vec() = default;
  explicit Vec(int size) : n(size) {}
  Vec(std::initializer_list<double> xs) {
    n = static_cast<int>(xs.size());
    int i = 0;
    for (double x : xs) a[i++] = x;
  }

  double& operator[](int i) { return a[i]; }
  double operator[](int i) const { return a[i]; }
  int size() const { return n; }

  Vec& operator+=(const Vec& o) {
    for (int i = 0; i < n; ++i) a[i] += o.a[i];
    return *this;
  }
  Vec& operator-=(const Vec& o) {
    for (int i = 0; i < n; ++i) a[i] -= o.a[i];
    return *this;
  }
  Vec& operator*=(double s) {
    for (int i = 0; i < n; ++i) a[i] *= s;
    return *this;
  }
};

inline Vec operator+(Vec x, const Vec& y) { return x += y; }
inline Vec operator-(Vec x, const Vec& y) { return x -= y; }
inline Vec operator*(double s, Vec x) { return x *= s; }
inline Vec operator*(Vec x, double s) { return x *= s; }

inline double edot(const Vec& x, const Vec& y) {
  double s = 0;
  for (int i = 0; i < x.n; ++i) s += x.a[i] * y.a[i];
  return s;
}
inline double enorm(const Vec& x) { return std::sqrt(edot(x, x)); }

inline Vec zeros(int n) { return Vec(n); }

inline Vec concat(const Vec& x, const Vec& y) {
  Vec r(x.n + y.n);
  for (int i = 0; i < x.n; ++i) r[i] = x[i];
  for (int i = 0; i < y.n; ++i) r[x.n + i] = y[i];
  return r;
}

inline Vec slice(const Vec& x, int begin, int count) {
  Vec r(count);
  for (int i = 0; i < count; ++i) r[i] = x[begin + i];
  return r;
}

// ---------------------------------------------------------------------------
// Rng: splitmix64-based generator.  Deterministic across platforms and
// compilers, which the reproducibility contract (byte-identical reports for
// a fixed seed) relies on; std::uniform_real_distribution is not.

class Rng {
 public:
  explicit Rng(std::uint64_t seed = kDefaultSeed) : state_(seed) {}

  std::uint64_t next_u64() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1) with 53 bits of state.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller (deterministic pairing).
  double normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    while (u1 <= 1e-300) u1 = uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double th = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(th);
    have_spare_ = true;
    return r * std::cos(th);
  }

 private:
  std::uint64_t state_;
  bool have_spare_ = false;
  double spare_ = 0.0;
};

// Shortest-form float formatting used by every emitter: 17 significant
// digits round-trip doubles exactly.
inline std::string format_double(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

}  // namespace renv
