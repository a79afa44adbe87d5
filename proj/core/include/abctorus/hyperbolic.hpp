#pragma once

#include <complex>
#include <limits>
#include <vector>

#include "abctorus/algebra.hpp"
#include "abctorus/fourier_map.hpp"
#include "abctorus/grid.hpp"
#include "abctorus/util.hpp"

namespace abctorus {

// ---------------------------------------------------------------------------
// Spectral data of an integer hyperbolic matrix
// ---------------------------------------------------------------------------

/// Stable/unstable eigendata of a hyperbolic integer matrix.
///
/// `stable` is sorted by modulus descending (stable.front() is the stable
/// eigenvalue closest to the unit circle); `unstable` is sorted ascending
/// (unstable.front() is the weakest expansion).  Eigenvectors are stored in
/// the same order, unit-normalized, with components in CVec (only the first
/// `dim` entries meaningful).
struct SpectralData {
  int dim = 0;
  std::vector<std::complex<double>> stable;
  std::vector<std::complex<double>> unstable;
  std::vector<CVec> stable_vecs;
  std::vector<CVec> unstable_vecs;
};

/// Eigendecomposition split across the unit circle. Throws NoHyperbolicity
/// if some eigenvalue has modulus within 1e-9 of 1.
SpectralData spectral_data(const IntMatrix& m);

/// Largest admissible slow-oscillation exponent for the pair (A, B):
/// min( ln|a_u_min| / ln|b_u_max| , ln|a_s_max| / ln|b_s_min| ), where
/// a_u_min is A's weakest expansion, b_u_max B's strongest expansion,
/// a_s_max A's weakest contraction and b_s_min B's strongest contraction.
double c_slow_bound(const SpectralData& a, const SpectralData& b);

// ---------------------------------------------------------------------------
// Topological conjugacy of a perturbed hyperbolic automorphism (Franks)
// ---------------------------------------------------------------------------

struct FranksOptions {
  double tol = 1e-8;         ///< residual gate for ||h o A - Abar o h||_C0
  int grid = 0;              ///< residual / projection grid (0 = default)
  int depth = 0;             ///< series depth (0 = auto from spectrum + tol)
  double prune_tol = 1e-12;  ///< prune tolerance for the projected map
  int tail_probe = 64;       ///< per-axis offset-probe resolution for the tail
};

/// Solution h = id + g of  h o A = Abar o h  with g continuous and
/// Z^N-periodic, built as a geometric series in the eigenbasis of Abar.
///
/// g is generally only Holder continuous, so the primary representation is a
/// pointwise evaluator (the truncated series); `projection` is a band-limited
/// least-squares stand-in whose deviation from the true g is reported in
/// `projection_tail`.
struct FranksConjugacy {
  int dim = 0;
  IMat abar{};
  FourierMap map_a;      ///< the perturbed map A
  FourierMap map_a_inv;  ///< pointwise inverse of A (Fourier representation)

  /// Eigendata of Abar: columns of `basis` are unit eigenvectors, `basis_inv`
  /// is the inverse matrix, `eigenvalues[i]` matches column i.
  std::array<std::complex<double>, kMaxDim> eigenvalues{};
  std::array<std::array<std::complex<double>, kMaxDim>, kMaxDim> basis{};
  std::array<std::array<std::complex<double>, kMaxDim>, kMaxDim> basis_inv{};

  int depth = 0;            ///< series truncation depth actually used
  double contraction = 0;   ///< sup||DP|| / spectral gap (must be < 1)
  double residual = 0;      ///< grid sup of ||h(A(x)) - Abar h(x)||_inf
  double projection_tail = 0;  ///< offset-grid sup of ||g - projection||_inf
  FourierMap projection;    ///< band-limited approximation of h (linear = id)

  /// Periodic part g(x) via the truncated series (x may be any lift).
  Vec periodic(const Vec& x) const;
  /// h(x) = x + g(x) (lifted value).
  Vec evaluate(const Vec& x) const;
  /// h^{-1}(y) by the fixed-point iteration x <- y - g(x); throws
  /// IterationCap if it fails to reach `tol` within `max_iter` rounds.
  Vec inverse(const Vec& y, double tol = 1e-12, int max_iter = 60) const;
};

/// Conjugates the perturbed hyperbolic map `a` (linear part must equal
/// `abar`) back to its linear model.  Throws ConfigInvalid on shape
/// mismatches, NoHyperbolicity if `abar` is not hyperbolic, NotContractive
/// if the periodic part is too large relative to the spectral gap, and
/// IterationCap if the series depth cannot reach the residual gate.
FranksConjugacy franks_conjugacy(const FourierMap& a, const IntMatrix& abar,
                                 const FranksOptions& opt = {});

/// Conjugates `t` by a Franks conjugacy: samples x -> h(t(h^{-1}(x))) on a
/// grid and projects the displacement to a Fourier map with identity linear
/// part.  Intended for maps commuting with h's hyperbolic map, where the
/// result is smooth even though h itself is only Holder.
FourierMap conjugate_by(const FranksConjugacy& h, const FourierMap& t,
                        int grid = 0, double prune_tol = 1e-12);

// ---------------------------------------------------------------------------
// Rotation vectors / empirical invariant data
// ---------------------------------------------------------------------------

/// Empirical rotation data of one orbit: the Birkhoff average of lifted
/// displacements along the orbit of `base`, with a stabilization error bar
/// (max deviation of the running average from its final value over the last
/// quarter of the orbit).
struct MeasureEstimate {
  Vec base{};
  int orbit_len = 0;
  Vec rotation{};
  double error_bar = 0;
};

/// Birkhoff average of lifted displacements of a map homotopic to the
/// identity (linear part must be the identity; ConfigInvalid otherwise).
MeasureEstimate rotation_vector(const FourierMap& t, const Vec& x0,
                                int orbit_len);

// ---------------------------------------------------------------------------
// Oscillation of an abelian family
// ---------------------------------------------------------------------------

struct OscillationOptions {
  int grid = 64;             ///< per-axis evaluation grid
  const IntMatrix* a = nullptr;  ///< optional spectra for the exponent bound
  const IntMatrix* b = nullptr;
  double degenerate_floor = 1e-13;  ///< rows below this do not enter the fit
};

struct OscillationRow {
  IVec p{};            ///< word exponents over the family
  double norm = 0;     ///< Euclidean norm of p
  double osc = 0;      ///< worst per-component max-minus-min of displacement
  double osc_upper = 0;  ///< osc plus an adjacent-sample variation pad
};

struct OscillationReport {
  std::vector<OscillationRow> rows;
  bool fit_valid = false;  ///< false when nearly all rows are degenerate
  LineFit fit{};           ///< log osc vs log ||p|| over non-degenerate rows
  double c_hat = 0;        ///< fitted growth exponent (slope), if valid
  double c_bound = std::numeric_limits<double>::quiet_NaN();  ///< spectra bound
};

/// Oscillation Osc(w) = max_i [max_x d_i(x) - min_x d_i(x)] of the lifted
/// displacement d of each word T_1^{p_1} ... T_m^{p_m} over a commuting
/// family of maps homotopic to the identity; per-component max-minus-min is
/// the lift-independent reading (a lift change shifts each d_i by an
/// integer constant).  Grid evaluation makes `osc` a certified lower bound
/// of the true sup; `osc_upper` adds a variation pad from adjacent samples.
/// Also fits log Osc against log ||p|| and, when both integer matrices are
/// supplied, reports the admissible exponent bound.
OscillationReport oscillation(const std::vector<FourierMap>& family,
                              const std::vector<IVec>& ps,
                              const OscillationOptions& opt = {});

// ---------------------------------------------------------------------------
// Fourier decay of a conjugated family
// ---------------------------------------------------------------------------

struct DecayOptions {
  int grid = 0;            ///< sampling grid (0 = default)
  int p_radius = 8;        ///< words range over the sup-ball of this radius
  double mode_floor = 1e-13;  ///< coefficients kept for the transform check
};

struct DecayRow {
  IVec p{};
  double max_mode = 0;  ///< largest |coefficient| over nonzero frequencies
  IVec argmax{};        ///< frequency attaining it
};

struct DecayReport {
  std::vector<DecayRow> rows;
  double max_nonzero_mode = 0;
  /// Residual of the intertwining identity  Abar * w_hat(Abar^t k, p)
  /// = w_hat(k, Bbar^t p)  over all stored coefficient pairs with both
  /// sides in range.
  double transform_residual = 0;
  int pairs_checked = 0;
  int modes_up_to = 0;
};

/// Tabulates Fourier coefficients of the displacement of every word
/// R^p = R_1^{p_1} ... R_m^{p_m} (family maps must have identity linear
/// part) for ||p||_inf <= p_radius, reporting the largest nonzero-frequency
/// coefficient per word and the intertwining residual against the given
/// hyperbolic pair.  For a family conjugate to translations all nonzero
/// modes vanish; residual mass localizes a broken relation.
DecayReport fourier_decay_diagnostic(const std::vector<FourierMap>& family,
                                     const IntMatrix& abar,
                                     const IntMatrix& bbar, int modes_up_to,
                                     const DecayOptions& opt = {});

// ---------------------------------------------------------------------------
// Lyapunov exponents
// ---------------------------------------------------------------------------

struct LyapunovResult {
  std::vector<double> exponents;   ///< sorted descending
  std::vector<double> error_bars;  ///< split-half discrepancy per exponent
  int orbit_len = 0;
};

/// QR-reorthogonalized Lyapunov exponents along one orbit (orbit_len >= 1000;
/// ConfigInvalid otherwise).  The Jacobian cocycle is re-orthogonalized every
/// step with the diagonal of R kept positive; exponents are the time averages
/// of log diag(R), and error bars compare first- and second-half averages.
LyapunovResult lyapunov_exponents(const FourierMap& t, const Vec& x0,
                                  int orbit_len);

// ---------------------------------------------------------------------------
// Invariant splitting of an Anosov-like map
// ---------------------------------------------------------------------------

struct SplittingOptions {
  int grid = 64;        ///< per-axis grid for the direction fields
  int iters = 12;       ///< power-iteration depth
  double converge_tol = 1e-6;  ///< last-iteration angle change gate
};

struct SplittingEstimate {
  FoliationField unstable;  ///< per-point dominant expanding direction
  FoliationField stable;    ///< per-point dominant contracting direction
  double equivariance_unstable = 0;  ///< max angle(DA u(x), u(A x))
  double equivariance_stable = 0;
  double last_change_unstable = 0;  ///< max angle moved on the final sweep
  double last_change_stable = 0;
  int iters = 0;
  /// For dim 3 with a 2-dimensional expanding block: largest angle between
  /// the dominant direction and the dominant 2-plane (0 otherwise).
  double flag_angle = 0;
};

/// Per-grid-point stable/unstable directions of a map whose linear part is
/// hyperbolic: the unstable direction is obtained by pushing a generic
/// vector forward along the backward orbit, the stable one by pulling back
/// along the forward orbit.  Equivariance is verified by re-running the
/// iteration at image points.  Throws NoHyperbolicity when the linear part
/// has no spectral gap or the iteration fails to settle.
SplittingEstimate splitting_estimate(const FourierMap& a,
                                     const SplittingOptions& opt = {});

// ---------------------------------------------------------------------------
// Derivative cocycle along an invariant line field
// ---------------------------------------------------------------------------

struct CocycleOptions {
  double angle_tol = 2e-2;      ///< invariance gate for the line field
  int invariance_samples = 256; ///< random points for the invariance check
  std::uint64_t seed = 0x636f6379u;
};

struct CocycleLogNorm {
  double sup_log = 0;  ///< sup_x |sum of step-wise log growth along the word|
  double invariance_residual = 0;  ///< max angle seen in the pre-check
};

/// Telescoped log-norm of the derivative cocycle of the word
/// T_1^{p_1} ... T_m^{p_m} along the line field F: at every grid point of F
/// the field vector is transported through the word with per-step
/// normalization, accumulating log growth factors.  Pre-checks that every
/// generator carries F to itself within `angle_tol` (FoliationNotInvariant
/// otherwise).  word.p must have one entry per family map.
CocycleLogNorm cocycle_log_norm(const std::vector<FourierMap>& family,
                                const GroupWord& word,
                                const FoliationField& field,
                                const CocycleOptions& opt = {});

}  // namespace abctorus
