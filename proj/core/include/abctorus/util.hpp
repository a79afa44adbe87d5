#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

namespace abctorus {

/// All torus machinery is written for ambient dimension 1..3 ("desk scale").
/// Vectors are fixed-capacity arrays; the active dimension travels with the
/// owning object, and unused trailing slots are kept at zero.
inline constexpr int kMaxDim = 3;

using Vec = std::array<double, kMaxDim>;
using IVec = std::array<int, kMaxDim>;
using CVec = std::array<std::complex<double>, kMaxDim>;

/// Integer matrix entries can grow under repeated products (map powers), so
/// the linear part uses 64-bit storage.
using IMat = std::array<std::array<std::int64_t, kMaxDim>, kMaxDim>;
using DMat = std::array<std::array<double, kMaxDim>, kMaxDim>;

inline Vec zero_vec() { return {0.0, 0.0, 0.0}; }
inline IVec zero_ivec() { return {0, 0, 0}; }

/// Identity on the full fixed-size storage; the argument documents the
/// intended dimension at call sites and is otherwise unused.
inline IMat identity_imat(int /*dim*/ = 0) {
  IMat m{};
  for (int i = 0; i < kMaxDim; ++i) m[i][i] = 1;
  return m;
}

inline double dot(int dim, const Vec& a, const Vec& b) {
  double s = 0.0;
  for (int i = 0; i < dim; ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(int dim, const Vec& a) { return std::sqrt(dot(dim, a, a)); }

inline double norm_inf(int dim, const Vec& a) {
  double s = 0.0;
  for (int i = 0; i < dim; ++i) s = std::max(s, std::abs(a[i]));
  return s;
}

inline int ivec_norm_inf(int dim, const IVec& n) {
  int s = 0;
  for (int i = 0; i < dim; ++i) s = std::max(s, std::abs(n[i]));
  return s;
}

inline long ivec_norm_1(int dim, const IVec& n) {
  long s = 0;
  for (int i = 0; i < dim; ++i) s += std::abs(static_cast<long>(n[i]));
  return s;
}

/// Fractional part in [0,1).
inline double mod1(double x) {
  double f = x - std::floor(x);
  // floor(x) can round such that f == 1.0 for x just below an integer.
  return f < 1.0 ? f : 0.0;
}

/// Signed distance to the nearest integer, in [-1/2, 1/2].
inline double dist_to_int_signed(double x) { return x - std::nearbyint(x); }

/// Distance to the nearest integer, in [0, 1/2].
inline double dist_to_int(double x) { return std::abs(x - std::nearbyint(x)); }

/// Euclidean distance on the torus (coordinatewise nearest representative).
inline double torus_dist(int dim, const Vec& a, const Vec& b) {
  double s = 0.0;
  for (int i = 0; i < dim; ++i) {
    double d = dist_to_int(a[i] - b[i]);
    s += d * d;
  }
  return std::sqrt(s);
}

inline Vec mat_apply(int dim, const IMat& m, const Vec& x) {
  Vec y = zero_vec();
  for (int i = 0; i < dim; ++i) {
    double s = 0.0;
    for (int j = 0; j < dim; ++j) s += static_cast<double>(m[i][j]) * x[j];
    y[i] = s;
  }
  return y;
}

inline Vec mat_apply(int dim, const DMat& m, const Vec& x) {
  Vec y = zero_vec();
  for (int i = 0; i < dim; ++i) {
    double s = 0.0;
    for (int j = 0; j < dim; ++j) s += m[i][j] * x[j];
    y[i] = s;
  }
  return y;
}

inline IMat mat_mul(int dim, const IMat& a, const IMat& b) {
  IMat c{};
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) {
      std::int64_t s = 0;
      for (int k = 0; k < dim; ++k) s += a[i][k] * b[k][j];
      c[i][j] = s;
    }
  return c;
}

inline bool mat_equal(int dim, const IMat& a, const IMat& b) {
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j)
      if (a[i][j] != b[i][j]) return false;
  return true;
}

/// Exact determinant by cofactor expansion (dim <= 3).
std::int64_t imat_det(int dim, const IMat& m);

/// Exact inverse of a unimodular integer matrix (|det| = 1); throws
/// NotInvertible otherwise.
IMat imat_unimodular_inverse(int dim, const IMat& m);

/// Determinant of a dense real matrix by cofactor expansion (dim <= 3).
double dmat_det(int dim, const DMat& m);

/// Inverse of a dense real matrix by the adjugate formula (dim <= 3).
/// The caller is responsible for checking that the determinant is nonzero.
DMat dmat_inverse(int dim, const DMat& m);

/// Deterministic xorshift-free RNG wrapper: a fixed-algorithm 64-bit Mersenne
/// twister with explicit bit-to-double conversion, so streams are identical
/// across platforms and library versions.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : s_(seed ? seed : 0x9e3779b97f4a7c15ull) {
    // splitmix64 warm-up to decorrelate nearby seeds
    for (int i = 0; i < 8; ++i) next_u64();
  }

  std::uint64_t next_u64() {
    // splitmix64: tiny, fast, and fully specified here (no library variance).
    s_ += 0x9e3779b97f4a7c15ull;
    std::uint64_t z = s_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  /// Uniform in [0,1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  /// Uniform integer in [lo, hi] inclusive.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
    return lo + static_cast<std::int64_t>(next_u64() %
                                          static_cast<std::uint64_t>(hi - lo + 1));
  }

private:
  std::uint64_t s_;
};

/// Global worker cap for the few internally parallel loops. 0 = use the
/// hardware count. Results are independent of the setting: work is split by
/// index ranges and no cross-thread reductions reorder floating point sums.
void set_max_threads(int n);
int max_threads();

/// Runs fn(lo, hi) over a static partition of [0, n). Each worker receives
/// one contiguous range, so per-worker scratch state is cheap to set up and
/// results do not depend on the worker count.
void parallel_chunks(std::size_t n,
                     const std::function<void(std::size_t, std::size_t)>& fn,
                     std::size_t min_grain = 1024);

/// Runs fn(i) for i in [0, n). Splits statically across workers when the
/// global cap and problem size justify it; otherwise runs serially.
void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn,
                  std::size_t min_grain = 1024);

/// Shortest-faithful decimal for a double ("%.17g"), used by every CSV/JSON
/// writer so that reruns are byte-identical.
std::string format_double(double x);

/// Ordinary least-squares line fit y = slope*x + intercept; residual is the
/// root-mean-square misfit.
struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;
  int points = 0;
};
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);
/// Fit of log(y) against log(x); pairs with a nonpositive entry are skipped.
LineFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace abctorus
