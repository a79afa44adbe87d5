// Diophantine machinery: simultaneous Diophantine certification of rotation
// data, construction from scalar Diophantine coefficients, quantitative
// Kronecker approximation search, covering-dimension estimation of the
// translation subgroup's orbit closure, and dyadic nets.
#pragma once

#include <cstdint>
#include <vector>

#include "abctorus/algebra.hpp"
#include "abctorus/util.hpp"

namespace abctorus {

struct DiophantineParams {
  double C = 0.0;
  double tau = 0.0;
};

/// Result of the exhaustive small-divisor scan
///   C_fit = min over 0 < |n|_inf <= n_max of |n|_inf^tau * max_i dist(<v_i, n>, Z).
/// `curve[s]`, s = 1..n_max, is the same minimum restricted to |n|_inf <= s,
/// so the full scan is one pass. Pass requires C_fit above `floor_tol` and no
/// decay across the last radius doubling:
/// curve[n_max] >= decay_ratio * curve[n_max/2].
struct SdcResult {
  double c_fit = 0.0;
  IVec worst_n{};
  std::vector<double> curve;  // index s = radius; [0] unused
  double tau = 0.0;
  int n_max = 0;
  bool pass = false;
  double doubling_ratio = 0.0;  // curve[n_max] / curve[n_max/2]
};

SdcResult sdc_check(const std::vector<Vec>& vectors, int dim, double tau,
                    int n_max, double floor_tol = 1e-9,
                    double decay_ratio = 0.3);

/// Scalar Diophantine scan of a single real number: the 1-torus case of
/// sdc_check over q = 1..n_max.
struct ScalarScan {
  double value = 0.0;
  double c_fit = 0.0;
  std::int64_t worst_q = 0;
  bool pass = false;
};
ScalarScan scalar_diophantine_scan(double a, double tau, int n_max,
                                   double floor_tol = 1e-9,
                                   double decay_ratio = 0.3);

/// rho = sum_i a[i] * A^(i-1) together with certificates: a scalar scan for
/// each nonvanishing coefficient and the simultaneous certificate for the
/// columns of rho. Failure is reported in the certificates, not thrown.
struct SdcConstruction {
  RotationMatrix rho;
  SdcResult columns;
  std::vector<ScalarScan> scalars;
  bool pass = false;
};
SdcConstruction sdc_from_diophantine(const std::vector<double>& a,
                                     const IntMatrix& A, double tau,
                                     int n_max = 4096);

struct KroneckerOptions {
  std::int64_t budget = 100000000;  // max (2n+1)^K enumeration size
};

/// Exhaustive minimization of ||M p - q - y|| over 0 < |p|_inf <= n (the
/// zero word is excluded: it approximates nothing), with the per-radius
/// running-minimum curve for exponent fitting. The matrix is given by its K
/// columns in T^N. Ties in the error are broken toward the representative
/// whose first nonzero coefficient is positive, then by lexicographically
/// smaller p.
struct KroneckerResult {
  int dim = 0;  // N
  int K = 0;
  int radius = 0;
  std::vector<std::int64_t> best_p;
  std::vector<std::int64_t> best_q;
  double err = 0.0;
  std::vector<double> curve;  // curve[s], s = 1..radius; [0] unused
  LineFit dyadic_fit;         // log err vs log s over s in {2,4,...,radius}
};
KroneckerResult kronecker_search(const std::vector<Vec>& m_columns, int dim,
                                 const Vec& y, int n,
                                 const KroneckerOptions& opt = {});

/// Covering-dimension estimate of the subgroup generated by the given
/// vectors: r(l) = max over grid targets of the distance to the closest
/// word value with |p|_1 <= l, fitted as r ~ c * l^(-d) over dyadic l.
struct DimensionResult {
  std::vector<double> ells;
  std::vector<double> radii;
  double d_fit = 0.0;
  double c_fit = 0.0;
  double fit_residual = 0.0;
  std::int64_t words_enumerated = 0;
};
DimensionResult dimension_estimate(const std::vector<Vec>& rhos, int dim,
                                   int ell_max, int grid,
                                   std::int64_t budget = 400000000);

/// One member of a dyadic net/shell: the word, its value, and both norms.
struct NetWord {
  std::vector<std::int64_t> p;
  Vec value{};         // torus value of the word
  double torus_norm = 0.0;
  std::int64_t word_norm = 0;
};

/// Shell D_m = { c 2^{-d(m+1)/2} < ||gamma|| <= c 2^{-d m/2} } within the
/// enumerated word ball, and the net S_m = shell members with word norm
/// <= 2^m. The shell is defined over the full subgroup; enumeration stops at
/// `enum_word_bound` (= 4 * 2^m), which the result records.
struct DyadicNet {
  int m = 0;
  double c = 0.0;
  double d = 0.0;
  std::int64_t enum_word_bound = 0;
  std::int64_t words_enumerated = 0;
  std::vector<NetWord> shell;
  std::vector<NetWord> net;
  bool empty_shell = true;
  double covering_radius = 0.0;  // of the net within the shell
};
DyadicNet dyadic_net_build(const std::vector<Vec>& rhos, int dim, double c,
                           double d, int m, std::int64_t budget = 100000000);

/// Generator count K0 = ceil(2N/eta^2) + 1 and the dimension target
/// d = K0/N, which satisfies 2/d < eta^2.
struct K0Result {
  int k0 = 0;
  double d = 0.0;
};
K0Result k0_for(double eta, int N);

}  // namespace abctorus
