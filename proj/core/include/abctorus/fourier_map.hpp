#pragma once

#include <complex>
#include <vector>

#include "abctorus/util.hpp"

namespace abctorus {

/// A point on the torus R^N / Z^N, stored as its representative in [0,1)^N.
struct TorusPoint {
  int dim = 0;
  Vec x = zero_vec();

  static TorusPoint wrap(int dim, const Vec& v) {
    TorusPoint p;
    p.dim = dim;
    for (int i = 0; i < dim; ++i) p.x[i] = mod1(v[i]);
    return p;
  }
};

/// One Fourier mode of a vector-valued trigonometric sum: frequency n and a
/// complex amplitude per component. Maps store only one representative per
/// conjugate pair {n, -n} (the one whose first nonzero frequency entry is
/// positive), so real-valuedness holds by construction.
struct Mode {
  IVec n = zero_ivec();
  CVec c{};
};

/// Self-map of the torus in semi-spectral form:
///
///     f(x) = M x + c + P(x),  P(x) = 2 Re sum_modes c_n e^{2 pi i <n,x>}
///
/// with integer linear part M, lift constant c (not reduced mod 1, so the
/// object doubles as a distinguished lift of the induced torus map), and a
/// finite stored mode set. Composition, inversion and norms live in
/// torus_ops.hpp; this header is the value type plus pointwise evaluation.
class FourierMap {
public:
  FourierMap() = default;
  FourierMap(int dim, const IMat& linear, const Vec& constant,
             std::vector<Mode> raw_modes = {});

  static FourierMap identity(int dim);
  static FourierMap translation(int dim, const Vec& c);
  static FourierMap affine(int dim, const IMat& linear, const Vec& c);

  int dim() const { return dim_; }
  const IMat& linear() const { return lin_; }
  const Vec& constant() const { return c0_; }
  void set_constant(const Vec& c) { c0_ = c; }
  void shift_constant(const Vec& d) {
    for (int i = 0; i < dim_; ++i) c0_[i] += d[i];
  }

  const std::vector<Mode>& modes() const { return modes_; }
  std::size_t mode_count() const { return modes_.size(); }
  bool is_affine() const { return modes_.empty(); }

  /// Largest |n_a| over stored modes and axes (0 when affine).
  int max_degree() const { return max_degree_; }
  int max_degree_axis(int a) const { return maxdeg_[a]; }

  /// Drops modes with amplitude ||c_n||_2 <= abs_tol; returns the l2 mass
  /// sqrt(sum ||dropped||^2) that was removed (counting both half-modes).
  double prune(double abs_tol);

  /// f(x); `lifted` keeps the real-valued lift, otherwise reduces mod 1.
  Vec evaluate(const Vec& x, bool lifted = false) const;

  /// Jacobian D f(x) = M + DP(x).
  DMat jacobian(const Vec& x) const;

  /// Periodic part P(x) (no linear or constant term).
  Vec periodic(const Vec& x) const;

  /// Batch evaluation of P at npts points (point-major layout, dim doubles
  /// per point). Parallelizes over points when a worker pool is allowed.
  void periodic_batch(const double* pts, std::size_t npts, double* out) const;

  /// sup-norm upper bound for P from the mode sums: sum 2 ||c_n||_2.
  double mode_c0_bound() const;

  /// Upper bound for ||P||_C0 + ||DP||_C0 from the mode sums.
  double mode_c1_bound() const;

  /// Structural check that the stored set is a well-formed canonical half
  /// (sorted, unique, first nonzero frequency positive).
  bool well_formed() const;

private:
  void canonicalize(std::vector<Mode> raw);
  void refresh_degree_cache();

  int dim_ = 0;
  IMat lin_ = identity_imat();
  Vec c0_ = zero_vec();
  std::vector<Mode> modes_;
  int max_degree_ = 0;
  IVec maxdeg_ = zero_ivec();
};

/// Scratch space for repeated pointwise evaluation (per-axis power tables).
/// Not shared between threads; batch helpers allocate one per worker chunk.
struct EvalScratch {
  std::vector<std::complex<double>> pow[kMaxDim];
};

/// P(y) into out[0..dim); y may be any lift (tables use fractional parts).
void eval_periodic(const FourierMap& f, const double* y, double* out,
                   EvalScratch& ws);

/// P(y) and its Jacobian DP(y) (row-major dim x dim into jac).
void eval_periodic_jac(const FourierMap& f, const double* y, double* val,
                       double* jac, EvalScratch& ws);

/// Orbit of the distinguished lift: X_{k+1} = M X_k + c + P(X_k), starting at
/// x0, returning steps+1 lifted points (including the start). The linear part
/// is applied exactly as stored, so hyperbolic lifts grow exponentially.
std::vector<Vec> lift_track(const FourierMap& f, const Vec& x0, int steps);

}  // namespace abctorus
