#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "abctorus/algebra.hpp"
#include "abctorus/diophantine.hpp"
#include "abctorus/fourier_map.hpp"
#include "abctorus/grid.hpp"
#include "abctorus/util.hpp"

namespace abctorus {

/// Conjugacy reconstruction for a commuting family near a rotation model,
/// by box-averaged Birkhoff sums of the lifted word orbit
///
///   S_n(x) = (2n+1)^{-m} sum_{||p||_inf <= n} ( T^p(x) - rho p ),
///
/// together with empirical regularity diagnostics: a bi-Hoelder exponent
/// fit and a modulus-of-continuity probe for leafwise derivatives along
/// words that return close to the identity.

/// One dyadic partial of the box average: the periodic displacement
/// S_n(x) - x sampled on the value grid, plus the C0 distance to the
/// previous dyadic order (0 for the first).
struct BirkhoffPartial {
  int n = 0;                  ///< box radius: averages ||p||_inf <= n
  GridFunction displacement;  ///< S_n(x) - x, comps = dim
  double step_c0 = 0.0;       ///< ||S_n - S_{n/2}||_C0
};

struct BirkhoffOptions {
  int grid = 64;              ///< value-grid resolution per axis
  double commute_tol = 1e-8;  ///< pairwise commutation tolerance
  int commute_samples = 32;   ///< sample points per generator pair
  std::uint64_t seed = 0x5eedb14d5eedb14dULL;  ///< commutation sample points
  double generate_factor = 0.4;  ///< require d_fit > factor * m / dim
  int generate_ell_max = 32;     ///< word-ball size for the covering test
  int generate_grid = 16;        ///< covering-test target resolution
  int out_degree = -1;           ///< band limit of averages (default G/2-1)
  double prune_tol = 1e-12;      ///< mode floor for intermediate averages
};

/// Result of the box-averaged reconstruction. The final average is reported
/// both as raw grid samples (mean removed) and as a band-limited map
/// id + g_est; the convergence curve holds ||S_{2n} - S_n||_C0 per dyadic
/// doubling.
struct BirkhoffReport {
  std::vector<BirkhoffPartial> partials;  ///< orders 1, 2, 4, ..., n_max
  std::vector<double> curve;          ///< step_c0 of orders 2, 4, ..., n_max
  GridFunction h_samples;             ///< final displacement, mean removed
  FourierMap h_estimate;              ///< id + band-limited mean-zero part
  Vec mean_shift{};                   ///< displacement mean that was removed
  double commute_residual = 0.0;      ///< worst sampled commutator distance
  double generator_dimension = 0.0;   ///< covering-dimension fit of rho
  double projection_error = 0.0;      ///< worst discarded l2 mass, all stages
  std::int64_t maps_applied = 0;      ///< generator applications performed
};

/// Averages the lifted word orbit over sup-norm boxes at dyadic radii
/// 1, 2, 4, ..., n_max (n_max a power of two). Generators must be homotopic
/// to the identity; their lifts are fixed so that each lifted generator
/// moves points by approximately its rotation column (constant shifted by
/// an integer so that c - rho lands in [-1/2, 1/2)). For a commuting family
/// the box sum factors one axis at a time,
///
///   Phi_e^n(x) = (2n+1)^{-1} sum_{|j| <= n} ( Phi_{e-1}^n(T_e^j x) - j rho_e ),
///
/// which is evaluated with band-limited intermediate averages; the walk
/// order is fixed, so results are independent of the thread count.
/// Throws NotCommuting if a sampled commutator exceeds commute_tol,
/// NotGenerating if the covering-dimension fit of the rotation columns
/// falls below generate_factor * m / dim, and ConfigInvalid on malformed
/// input (non-identity linear part, n_max not a power of two, ...).
BirkhoffReport birkhoff_reconstruct(const std::vector<FourierMap>& family,
                                    const RotationMatrix& rho, int n_max,
                                    const BirkhoffOptions& opt = {});

/// Log-log regression of image distance against point distance over random
/// grid-aligned pairs at dyadic separations. `eta`/`constant`/`residual`
/// fit d(h x, h y) ~ C d(x, y)^eta; the `inverse_*` fields fit the same
/// sample cloud with the axes swapped, which estimates the exponent of
/// h^{-1} without inverting h. For a bi-Hoelder homeomorphism both
/// exponents land in (0, 1] up to fit noise, and eta * inverse_eta <= 1
/// holds exactly for least-squares fits on the same cloud.
struct HolderEstimate {
  std::vector<double> xdist;  ///< sampled pair distances (torus metric)
  std::vector<double> ydist;  ///< distances between the image points
  double eta = 0.0;
  double constant = 0.0;   ///< C in d_y ~ C d_x^eta
  double residual = 0.0;   ///< rms log-log fit residual
  double inverse_eta = 0.0;
  double inverse_constant = 0.0;
  double inverse_residual = 0.0;
  std::size_t pairs = 0;
};

struct HolderOptions {
  int scale_min_exp = 2;  ///< largest separation is 2^-scale_min_exp
  int scale_max_exp = 6;  ///< smallest separation is 2^-scale_max_exp
  std::uint64_t seed = 0x401de205a1e5ULL;
};

/// Estimates the Hoelder exponent of the homeomorphism id + displacement
/// from its grid samples. Pairs are drawn on the sample grid itself (both
/// endpoints are grid points, separations are exact grid offsets), so no
/// interpolation enters; `pair_count` pairs are drawn per dyadic scale.
/// Requires G * 2^-scale_max_exp >= 1, else ConfigInvalid.
HolderEstimate holder_estimate(const GridFunction& displacement,
                               int pair_count, const HolderOptions& opt = {});

/// One probe word: its letters, the torus norm of its rotation value
/// (the net's ||gamma||), and the leafwise derivative deviation
/// sup_x | <D_x T_gamma v(x), v(T_gamma x)> - 1 |.
struct MocRow {
  std::vector<std::int64_t> p;
  double gamma_norm = 0.0;
  double deviation = 0.0;
};

struct MocOptions {
  double angle_tol = 1e-2;  ///< invariance pre-check threshold (radians)
};

/// Modulus-of-continuity table with a power-law fit psi(t) = C t^nu of
/// deviation against ||gamma|| (rows with zero norm or zero deviation are
/// excluded from the fit; fit_valid requires at least three usable rows).
struct MocReport {
  std::vector<MocRow> rows;  ///< sorted by decreasing gamma_norm
  double nu = 0.0;
  double c_fit = 0.0;
  double fit_residual = 0.0;
  bool fit_valid = false;
  double invariance_residual = 0.0;  ///< worst sampled field-invariance angle
};

/// Tabulates the leafwise derivative deviation of word maps T_gamma along
/// an invariant oriented line field, for probe words gamma (typically the
/// members of a dyadic net, whose torus norms tend to 0). Words use the
/// walker convention: letters are generator indices with signed powers.
/// Throws FoliationNotInvariant if the field fails the sampled invariance
/// check under any generator.
MocReport modulus_of_continuity_probe(const std::vector<FourierMap>& family,
                                      const FoliationField& field,
                                      const std::vector<NetWord>& words,
                                      const MocOptions& opt = {});

}  // namespace abctorus
