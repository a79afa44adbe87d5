#pragma once

#include <cstddef>
#include <vector>

#include "abctorus/fourier_map.hpp"
#include "abctorus/util.hpp"

namespace abctorus {

/// Values on the uniform grid {0, 1/G, ..., (G-1)/G}^dim, point-major with
/// `comps` doubles per point (row-major flattening of the axes).
struct GridFunction {
  int dim = 0;
  int comps = 0;
  int G = 0;
  std::vector<double> v;

  GridFunction() = default;
  GridFunction(int dim_, int comps_, int G_);

  std::size_t npoints() const;
  double* at(std::size_t flat) { return v.data() + flat * comps; }
  const double* at(std::size_t flat) const { return v.data() + flat * comps; }

  /// Coordinates of the grid point with the given flat index.
  Vec point(std::size_t flat) const;
};

/// Samples the periodic part P of a map exactly on a G-grid (inverse DFT of
/// the stored modes). Requires max_degree <= G/2 - 1, else GridTooCoarse.
GridFunction sample_periodic(const FourierMap& f, int G);

/// Band-limited projection of grid samples: keeps modes with
/// ||n||_inf <= out_degree and amplitude > prune_tol; reports what was cut.
struct GridProjection {
  FourierMap fn;            ///< linear part 0, constant = grid mean
  double discarded_l2 = 0;  ///< l2 mass above out_degree or under prune_tol
  double band_edge_mass = 0;  ///< l2 mass at ||n||_inf = G/2-1 plus Nyquist
};

GridProjection project_grid(const GridFunction& g, int out_degree,
                            double prune_tol);

/// A measurable line field on the torus: one unit direction per grid point.
/// Directions are lines (v and -v describe the same leaf); helpers fix an
/// orientation so fields can be compared and interpolated.
struct FoliationField {
  int dim = 0;
  int G = 0;
  std::vector<double> dirs;  ///< unit vectors, point-major

  FoliationField() = default;
  FoliationField(int dim_, int G_);

  std::size_t npoints() const;
  double* at(std::size_t flat) { return dirs.data() + flat * dim; }
  const double* at(std::size_t flat) const { return dirs.data() + flat * dim; }

  /// Direction at the grid point nearest to x (sign as stored).
  Vec sample_nearest(const Vec& x) const;

  /// Flips signs pointwise so that <dir, ref> >= 0.
  void orient_along(const Vec& ref);

  /// Largest angle between the directions at axis-adjacent grid points,
  /// treating v and -v as equal (continuity diagnostic).
  double max_adjacent_angle() const;
};

/// Unsigned angle between two lines spanned by a and b (radians, in [0,pi/2]).
double line_angle(int dim, const Vec& a, const Vec& b);

/// Leafwise C^k norm: sum over i <= k of sup_x |D_v^i phi (x)|, where the
/// i-th derivative along the frozen direction v(x) is taken by iterated
/// centered differences of step `delta` (default 1/(2G)) on the band-limited
/// interpolant of phi. phi may have any number of components.
double norm_ck_foliation(const GridFunction& phi, const FoliationField& v,
                         int k, double delta = 0.0);

}  // namespace abctorus
