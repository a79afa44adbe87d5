#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "abctorus/algebra.hpp"
#include "abctorus/diophantine.hpp"
#include "abctorus/fourier_map.hpp"
#include "abctorus/torus_ops.hpp"

namespace abctorus {

/// Iterative construction of a simultaneous conjugacy taking a commuting
/// family of near-translations T_k = id + rho_k + R_k back to the rigid
/// translations x -> x + rho_k. Each sweep solves the linearized
/// (cohomological) equation below a frequency cutoff, conjugates the whole
/// family by id + H, recenters the zero mode so the rotation vectors stay
/// pinned, and squares the cutoff growth, giving superlinear contraction of
/// the remainder while the rotation data rho is never modified.

struct CohomologicalOptions {
  /// A frequency n with max_k |e^{2 pi i <rho_k, n>} - 1| below this floor
  /// inside the scanned ball aborts the solve (exact or near resonance).
  double divisor_floor = 1e-14;
};

struct CohomologicalReport {
  /// Smallest selected divisor magnitude over the scanned ball, and where.
  double min_divisor = 0.0;
  IVec min_divisor_at = zero_ivec();
  /// max_n |H_n * divisor + R_{k(n),n}|: exactness at the selected generator.
  double solve_residual = 0.0;
  /// max over n and j != k(n) of |H_n (e^{2 pi i <rho_j, n>} - 1) + R_{j,n}|:
  /// how compatible the one-generator solution is with the rest of the
  /// family (zero for an exactly commuting family, first order in R else).
  double cross_residual = 0.0;
  int modes_solved = 0;
};

/// Solves, mode by mode for 0 < ||n||_inf <= cutoff, the equation
///
///     H(x + rho_k) - H(x) = -R_k(x)
///
/// using for each frequency the generator k(n) with the largest divisor
/// |e^{2 pi i <rho_k, n>} - 1| (ties to the smaller index). The remainders
/// R_k are read off the nonzero-frequency modes of `maps` (subtracting the
/// affine part changes no such mode, so the current conjugated generators
/// can be passed directly). Returns the truncated correction field H as a
/// FourierMap with zero linear part and zero constant; the sweep conjugator
/// is id + H. Every frequency in the ball is scanned against the divisor
/// floor, so exact resonances throw SmallDivisorBreakdown even where the
/// remainder has no mass.
FourierMap cohomological_solve(const std::vector<FourierMap>& maps,
                               const RotationMatrix& rho, int cutoff,
                               const CohomologicalOptions& opt = {},
                               CohomologicalReport* report = nullptr);

struct KamConfig {
  int grid = 0;                ///< 0 = default_grid(dim)
  int initial_cutoff = 8;      ///< J_0; grows as ceil(J^{3/2}), capped G/2-1
  double target = 1e-10;       ///< stop once the remainder norm is below
  double basin = 0.05;         ///< required initial C1 size of the remainder
  int max_iterations = 30;
  int orbit_length = 1 << 14;  ///< recentering orbit length
  double commutation_tol = 1e-9;
  int commutation_samples = 32;
  double divisor_floor = 1e-14;
  double prune_tol = 1e-14;    ///< working amplitude floor for compositions
  double rho_tau = 1.5;        ///< exponent for the rho-column certificate
  int rho_scan = 512;          ///< scan radius for the rho-column certificate
  std::uint64_t seed = 0x414243;  ///< commutation sample points
};

/// One row of the per-sweep table.
struct KamIterate {
  int index = 0;            ///< sweep number, starting at 1
  int cutoff = 0;           ///< J used by the solve in this sweep
  double epsilon = 0.0;     ///< remainder norm after the sweep
  double solve_residual = 0.0;
  double cross_residual = 0.0;
  double min_divisor = 0.0;
  double drift = 0.0;       ///< zero-mode recentering applied, sup norm
};

struct KamState {
  int dim = 0;
  int grid = 0;
  int iterate = 0;
  int cutoff = 0;
  std::vector<FourierMap> maps;   ///< current conjugated generators
  RotationMatrix rho = RotationMatrix(1, DMat{});  ///< fixed; never rewritten
  FourierMap conjugacy;           ///< accumulated h^(n) o ... o h^(1)
  double epsilon = 0.0;           ///< max_k ||T_k - id - rho_k||_C1
  int rising_streak = 0;          ///< consecutive sweeps with growing epsilon
};

/// Remainder size used throughout: max over generators of
/// ||c_k - rho_k||_inf + ||P_k||_C0 + ||DP_k||_C0 on a G-grid.
double kam_epsilon(const std::vector<FourierMap>& maps,
                   const RotationMatrix& rho, int grid = 0);

/// Validates the family (dimension match, identity linear parts) and packs
/// the initial state. Throws ConfigInvalid when the remainder is outside the
/// contraction basin.
KamState kam_init(const std::vector<FourierMap>& maps,
                  const RotationMatrix& rho, const KamConfig& cfg = {});

/// One sweep: solve below the cutoff, conjugate the family by id + H at the
/// full resolvable band, recenter the zero modes against the measured
/// rotation drift, then grow the cutoff. Throws SmallDivisorBreakdown from
/// the solve and DivergenceDetected after three consecutive sweeps of
/// remainder growth (or when the remainder leaves the basin).
KamState kam_step(const KamState& state, const KamConfig& cfg = {},
                  KamIterate* row = nullptr);

struct KamReport {
  std::vector<KamIterate> table;
  std::string termination;        ///< "converged" | "trivial"
  bool converged = false;
  double initial_epsilon = 0.0;
  double final_epsilon = 0.0;
  /// Pointwise conjugation residual, recomputed from scratch with the
  /// accumulated conjugacy and its honest inverse:
  /// max_k sup_x dist(h(T_k(h^{-1}(x))) - x - rho_k, Z^N).
  double final_residual = 0.0;
  double inverse_residual = 0.0;  ///< achieved residual of invert(conjugacy)
  SdcResult certificate;          ///< simultaneous-approximation scan of rho
};

struct KamResult {
  FourierMap conjugacy;
  std::vector<FourierMap> conjugated;  ///< final generators (= translations
                                       ///  up to the final remainder)
  KamReport report;
};

/// Full pipeline: commutation precheck at random sample points
/// (NotCommuting), rho-column certificate (recorded, not gated — resonant
/// rho surfaces as SmallDivisorBreakdown in the first solve), basin check
/// (ConfigInvalid), sweeps until the remainder norm is below target.
/// Throws IterationCap when the budget runs out before that.
KamResult kam_run(const std::vector<FourierMap>& maps,
                  const RotationMatrix& rho, const KamConfig& cfg = {});

struct AnosovLinearization {
  Vec f0 = zero_vec();        ///< constant part of h A h^{-1} - Abar x
  double variation = 0.0;     ///< sup over the grid of |F - f0|
  /// max over columns rho_j and sample points of |F(x + rho_j) - F(x)|;
  /// near-invariance under the translation family is what forces F to be
  /// constant in the first place.
  double translation_residual = 0.0;
  FourierMap corrected;       ///< h - (id - Abar)^{-1} f0
};

struct LinearizeOptions {
  double tol = 1e-6;   ///< allowed sup-variation of F before NotConstant
  int grid = 0;
  int samples = 128;   ///< sample points for the translation residual
};

/// Given the hyperbolic generator A (linear part Abar) and the conjugacy h
/// that straightens the translation subgroup, forms F(x) = h(A(h^{-1}(x)))
/// - Abar x pointwise, checks it is constant (NotConstant otherwise), and
/// absorbs the constant with the translation t(x) = x + (id - Abar)^{-1} F_0:
/// since t takes Abar x to Abar x + F_0 under conjugation, the corrected
/// conjugacy t^{-1} o h = h - (id - Abar)^{-1} F_0 carries A to exactly
/// Abar x. Requires id - Abar invertible (ConfigInvalid).
AnosovLinearization linearize_anosov(const FourierMap& A, const FourierMap& h,
                                     const IntMatrix& Abar,
                                     const RotationMatrix& rho,
                                     const LinearizeOptions& opt = {});

}  // namespace abctorus
