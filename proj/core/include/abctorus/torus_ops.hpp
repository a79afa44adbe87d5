#pragma once

#include "abctorus/fourier_map.hpp"
#include "abctorus/grid.hpp"

namespace abctorus {

/// Working grid used when an operation does not pin one explicitly:
/// 1024 points on the circle, 256 per axis on T^2, 64 per axis on T^3.
int default_grid(int dim);

struct ComposeOptions {
  int grid = 0;              ///< 0 = default_grid(dim)
  int out_degree = -1;       ///< -1 = keep the whole resolvable band (G/2-1)
  double prune_tol = 1e-16;  ///< drop output modes at or below this amplitude
  double alias_tol = 1e-6;   ///< band-edge mass above this throws GridTooCoarse
};

struct ComposeResult {
  FourierMap map;
  double discarded_l2 = 0.0;   ///< mass truncated above out_degree or pruned
  double band_edge_mass = 0.0; ///< mass at the top of the resolvable band
};

/// f after g (x -> f(g(x))). Lift constants compose exactly, so the result
/// is the distinguished lift of the composition. Affine factors compose in
/// closed form; otherwise g is sampled on the grid, f's periodic part is
/// evaluated at the image points, and the product is projected back onto the
/// requested band, reporting the truncated tail.
ComposeResult compose(const FourierMap& f, const FourierMap& g,
                      const ComposeOptions& opt = {});

struct InvertOptions {
  int grid = 0;
  double tol = 1e-10;        ///< contract: both residuals f.g-id, g.f-id below
  int max_newton = 50;
  double newton_tol = 5e-15; ///< per-point solve target (sup norm)
  double prune_tol = 1e-16;
};

struct InvertResult {
  FourierMap inv;
  double residual = 0.0;     ///< achieved max of the two composition residuals
};

/// Inverse map via pointwise damped Newton from the exact affine inverse,
/// then band projection. Requires a unimodular linear part and a periodic
/// part small enough for Newton to converge everywhere on the grid.
InvertResult invert(const FourierMap& f, const InvertOptions& opt = {});

/// Sum over 0 <= i <= k of sup_x |D^i P(x)| for the periodic part P, with
/// the sup taken over a G-grid and derivatives formed spectrally. The i = 0
/// term uses the pointwise l2 norm, i = 1 the spectral matrix norm, i >= 2
/// the Frobenius norm of the symmetric derivative tensor. k up to 6.
double norm_ck(const FourierMap& f, int k, int G = 0);

/// Convenience: sup-norm of the periodic part on a G-grid (norm_ck with k=0).
double norm_c0(const FourierMap& f, int G = 0);

}  // namespace abctorus
