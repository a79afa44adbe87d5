#include "abctorus/herman.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "abctorus/errors.hpp"
#include "abctorus/torus_ops.hpp"
#include "word_walk.hpp"

namespace abctorus {

namespace {

using detail::advance;
using detail::flat_point;
using detail::imat_identity;
using detail::pow_size;
using detail::require_identity_family;
using detail::WordWalker;

bool power_of_two(int n) { return n >= 1 && (n & (n - 1)) == 0; }

Vec random_point(int dim, Rng& rng) {
  Vec x = zero_vec();
  for (int a = 0; a < dim; ++a) x[a] = rng.uniform();
  return x;
}

/// Worst sampled commutator distance d(T_i T_j x, T_j T_i x) over random
/// points, for all generator pairs.
double commutator_residual(const std::vector<FourierMap>& family, int samples,
                           Rng& rng) {
  const int dim = family.front().dim();
  const int m = static_cast<int>(family.size());
  double worst = 0.0;
  for (int i = 0; i < m; ++i) {
    for (int j = i + 1; j < m; ++j) {
      for (int s = 0; s < samples; ++s) {
        const Vec x = random_point(dim, rng);
        const Vec u = family[i].evaluate(family[j].evaluate(x));
        const Vec v = family[j].evaluate(family[i].evaluate(x));
        worst = std::max(worst, torus_dist(dim, u, v));
      }
    }
  }
  return worst;
}

/// acc[p] += phi(z[p]) - base[p] - shift, where phi is identity-linear and
/// z carries lifted points (phi(z) = z + c + P(z)).
void accumulate_map_values(const FourierMap& phi, const std::vector<double>& z,
                           const std::vector<double>& base,
                           std::size_t np, int dim, const Vec& shift,
                           std::vector<double>& scratch,
                           std::vector<double>& acc) {
  const bool trivial = phi.modes().empty();
  if (!trivial) phi.periodic_batch(z.data(), np, scratch.data());
  const Vec& c = phi.constant();
  for (std::size_t p = 0; p < np; ++p) {
    for (int a = 0; a < dim; ++a) {
      const std::size_t i = p * dim + a;
      double v = z[i] + c[a] - base[i] - shift[a];
      if (!trivial) v += scratch[i];
      acc[i] += v;
    }
  }
}

double grid_sup_diff(const GridFunction& a, const GridFunction& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.v.size(); ++i)
    worst = std::max(worst, std::abs(a.v[i] - b.v[i]));
  return worst;
}

}  // namespace

BirkhoffReport birkhoff_reconstruct(const std::vector<FourierMap>& family,
                                    const RotationMatrix& rho, int n_max,
                                    const BirkhoffOptions& opt) {
  require_identity_family(family, "birkhoff_reconstruct");
  const int dim = family.front().dim();
  const int m = static_cast<int>(family.size());
  if (m > kMaxDim)
    throw ConfigInvalid("birkhoff_reconstruct: at most " +
                        std::to_string(kMaxDim) + " generators");
  if (rho.dim() != dim)
    throw DimensionMismatch("birkhoff_reconstruct: rho dimension " +
                            std::to_string(rho.dim()) + " vs family " +
                            std::to_string(dim));
  if (!power_of_two(n_max))
    throw ConfigInvalid("birkhoff_reconstruct: n_max must be a power of two, got " +
                        std::to_string(n_max));
  const int G = opt.grid;
  if (G < 4) throw ConfigInvalid("birkhoff_reconstruct: grid must be >= 4");
  const int band = G / 2 - 1;
  const int deg = opt.out_degree < 0 ? band : std::min(opt.out_degree, band);
  if (deg < 1)
    throw ConfigInvalid("birkhoff_reconstruct: band limit must be >= 1");

  BirkhoffReport rep;

  // Hypothesis checks: the family must commute and the rotation columns
  // must generate a dense subgroup (covering-dimension proxy).
  Rng rng(opt.seed);
  rep.commute_residual = commutator_residual(family, opt.commute_samples, rng);
  if (rep.commute_residual > opt.commute_tol)
    throw NotCommuting("birkhoff_reconstruct: sampled commutator " +
                       format_double(rep.commute_residual) + " exceeds " +
                       format_double(opt.commute_tol));
  std::vector<Vec> columns;
  for (int j = 0; j < m; ++j) columns.push_back(rho.column(j));
  const DimensionResult dres = dimension_estimate(
      columns, dim, opt.generate_ell_max, opt.generate_grid);
  rep.generator_dimension = dres.d_fit;
  const double d_need = opt.generate_factor * static_cast<double>(m) / dim;
  if (!(dres.d_fit > d_need))
    throw NotGenerating("birkhoff_reconstruct: covering-dimension fit " +
                        format_double(dres.d_fit) + " below " +
                        format_double(d_need) +
                        "; rotation columns do not generate");

  // Fix generator lifts: shift each constant by an integer so the lifted
  // generator moves points by approximately its rotation column.
  std::vector<FourierMap> lifted = family;
  for (int e = 0; e < m; ++e) {
    Vec shift = zero_vec();
    for (int a = 0; a < dim; ++a)
      shift[a] = -std::round(lifted[e].constant()[a] - rho.column(e)[a]);
    lifted[e].shift_constant(shift);
  }

  std::vector<int> ns;
  for (int n = 1; n <= n_max; n *= 2) ns.push_back(n);
  const int n_ck = static_cast<int>(ns.size());
  const std::size_t np = pow_size(G, dim);

  // Base grid coordinates, point-major (matches GridFunction flattening).
  std::vector<double> base(np * dim);
  for (std::size_t p = 0; p < np; ++p) {
    const Vec x = flat_point(dim, G, p);
    for (int a = 0; a < dim; ++a) base[p * dim + a] = x[a];
  }

  // One cumulative average map per dyadic order; axis passes refine them:
  //   Phi_e^n(x) = (2n+1)^{-1} sum_{|j|<=n} ( Phi_{e-1}^n(T_e^j x) - j rho_e ).
  std::vector<FourierMap> phi(n_ck, FourierMap::identity(dim));
  std::vector<GridFunction> disp(n_ck);
  std::vector<double> scratch(np * dim);

  for (int e = 0; e < m; ++e) {
    std::vector<std::vector<double>> acc(
        n_ck, std::vector<double>(np * dim, 0.0));
    const Vec rho_e = rho.column(e);

    // j = 0 term.
    for (int k = 0; k < n_ck; ++k)
      accumulate_map_values(phi[k], base, base, np, dim, zero_vec(), scratch,
                            acc[k]);

    // One walker per orbit direction; each step advances every grid point.
    WordWalker up(lifted, G);
    WordWalker down(lifted, G);
    for (int j = 1; j <= n_max; ++j) {
      up.step(e, +1);
      down.step(e, -1);
      rep.maps_applied += 2;
      Vec shift_up = zero_vec();
      Vec shift_dn = zero_vec();
      for (int a = 0; a < dim; ++a) {
        shift_up[a] = j * rho_e[a];
        shift_dn[a] = -j * rho_e[a];
      }
      for (int k = 0; k < n_ck; ++k) {
        if (ns[k] < j) continue;
        accumulate_map_values(phi[k], up.y, base, np, dim, shift_up, scratch,
                              acc[k]);
        accumulate_map_values(phi[k], down.y, base, np, dim, shift_dn, scratch,
                              acc[k]);
      }
    }

    for (int k = 0; k < n_ck; ++k) {
      const double w = 1.0 / (2.0 * ns[k] + 1.0);
      GridFunction g(dim, dim, G);
      for (std::size_t i = 0; i < acc[k].size(); ++i) g.v[i] = acc[k][i] * w;
      disp[k] = std::move(g);
      if (e + 1 < m) {
        const GridProjection pr = project_grid(disp[k], deg, opt.prune_tol);
        rep.projection_error = std::max(
            rep.projection_error, pr.discarded_l2 + pr.band_edge_mass);
        phi[k] = FourierMap(dim, imat_identity(dim), pr.fn.constant(),
                            pr.fn.modes());
      }
    }
  }

  rep.partials.resize(n_ck);
  for (int k = 0; k < n_ck; ++k) {
    rep.partials[k].n = ns[k];
    rep.partials[k].step_c0 =
        k == 0 ? 0.0 : grid_sup_diff(disp[k], disp[k - 1]);
    if (k > 0) rep.curve.push_back(rep.partials[k].step_c0);
  }
  for (int k = 0; k < n_ck; ++k)
    rep.partials[k].displacement = std::move(disp[k]);

  // Mean-zero normalization of the final average: conjugacies are only
  // identified modulo a constant.
  const GridFunction& fin = rep.partials.back().displacement;
  rep.h_samples = fin;
  for (int a = 0; a < dim; ++a) {
    double mean = 0.0;
    for (std::size_t p = 0; p < np; ++p) mean += fin.v[p * dim + a];
    mean /= static_cast<double>(np);
    rep.mean_shift[a] = mean;
    for (std::size_t p = 0; p < np; ++p) rep.h_samples.v[p * dim + a] -= mean;
  }
  const GridProjection pr = project_grid(rep.h_samples, deg, opt.prune_tol);
  rep.projection_error =
      std::max(rep.projection_error, pr.discarded_l2 + pr.band_edge_mass);
  rep.h_estimate =
      FourierMap(dim, imat_identity(dim), zero_vec(), pr.fn.modes());
  return rep;
}

HolderEstimate holder_estimate(const GridFunction& displacement,
                               int pair_count, const HolderOptions& opt) {
  const int dim = displacement.dim;
  const int G = displacement.G;
  if (dim < 1 || dim > kMaxDim || displacement.comps != dim)
    throw ConfigInvalid("holder_estimate: displacement must have one component per axis");
  if (pair_count < 1)
    throw ConfigInvalid("holder_estimate: pair_count must be >= 1");
  if (opt.scale_min_exp < 1 || opt.scale_max_exp < opt.scale_min_exp)
    throw ConfigInvalid("holder_estimate: bad scale range");
  if ((G >> opt.scale_max_exp) < 1)
    throw ConfigInvalid("holder_estimate: grid " + std::to_string(G) +
                        " too coarse for scale 2^-" +
                        std::to_string(opt.scale_max_exp));

  Rng rng(opt.seed);
  HolderEstimate est;
  for (int j = opt.scale_min_exp; j <= opt.scale_max_exp; ++j) {
    const int sep = G >> j;  // separation in grid steps
    for (int t = 0; t < pair_count; ++t) {
      int ix[kMaxDim] = {0, 0, 0};
      int off[kMaxDim] = {0, 0, 0};
      // Random grid point and a grid offset of length ~sep in a random
      // direction (both endpoints are exact grid points).
      double dir[kMaxDim] = {0, 0, 0};
      double n2 = 0.0;
      while (n2 < 1e-12) {
        n2 = 0.0;
        for (int a = 0; a < dim; ++a) {
          dir[a] = rng.uniform(-1.0, 1.0);
          n2 += dir[a] * dir[a];
        }
        n2 = std::sqrt(n2);
      }
      bool all_zero = true;
      for (int a = 0; a < dim; ++a) {
        ix[a] = static_cast<int>(rng.uniform_int(0, G - 1));
        off[a] = static_cast<int>(std::lround(sep * dir[a] / n2));
        if (off[a] != 0) all_zero = false;
      }
      if (all_zero) off[0] = sep;

      std::size_t fx = 0;
      std::size_t fy = 0;
      Vec px = zero_vec();
      Vec py = zero_vec();
      for (int a = 0; a < dim; ++a) {
        const int ya = ((ix[a] + off[a]) % G + G) % G;
        fx = fx * G + static_cast<std::size_t>(ix[a]);
        fy = fy * G + static_cast<std::size_t>(ya);
        px[a] = static_cast<double>(ix[a]) / G;
        py[a] = static_cast<double>(ya) / G;
      }
      Vec hx = px;
      Vec hy = py;
      const double* dx = displacement.at(fx);
      const double* dy = displacement.at(fy);
      for (int a = 0; a < dim; ++a) {
        hx[a] += dx[a];
        hy[a] += dy[a];
      }
      est.xdist.push_back(torus_dist(dim, px, py));
      est.ydist.push_back(torus_dist(dim, hx, hy));
    }
  }
  est.pairs = est.xdist.size();

  const LineFit fwd = fit_loglog(est.xdist, est.ydist);
  est.eta = fwd.slope;
  est.constant = std::exp(fwd.intercept);
  est.residual = fwd.residual;
  const LineFit bwd = fit_loglog(est.ydist, est.xdist);
  est.inverse_eta = bwd.slope;
  est.inverse_constant = std::exp(bwd.intercept);
  est.inverse_residual = bwd.residual;
  return est;
}

MocReport modulus_of_continuity_probe(const std::vector<FourierMap>& family,
                                      const FoliationField& field,
                                      const std::vector<NetWord>& words,
                                      const MocOptions& opt) {
  require_identity_family(family, "modulus_of_continuity_probe");
  const int dim = family.front().dim();
  const int m = static_cast<int>(family.size());
  if (field.dim != dim)
    throw DimensionMismatch("modulus_of_continuity_probe: field dimension " +
                            std::to_string(field.dim) + " vs family " +
                            std::to_string(dim));
  for (const NetWord& w : words)
    if (static_cast<int>(w.p.size()) != m)
      throw ConfigInvalid(
          "modulus_of_continuity_probe: word length must equal family size");

  MocReport rep;

  // Invariance pre-check: the pushed-forward direction must align with the
  // stored field at the image point, for every generator. The base direction
  // is exact (grid points); only the image point is nearest-sampled.
  EvalScratch ws;
  double jac[kMaxDim * kMaxDim];
  double val[kMaxDim];
  for (const FourierMap& f : family) {
    for (std::size_t fl = 0; fl < field.npoints(); ++fl) {
      const Vec x = flat_point(dim, field.G, fl);
      Vec v = zero_vec();
      for (int a = 0; a < dim; ++a) v[a] = field.at(fl)[a];
      Vec w = v;
      if (!f.modes().empty()) {
        eval_periodic_jac(f, x.data(), val, jac, ws);
        for (int a = 0; a < dim; ++a) {
          double s2 = v[a];
          for (int b = 0; b < dim; ++b) s2 += jac[a * dim + b] * v[b];
          w[a] = s2;
        }
      }
      const Vec y = advance(f, x, ws);
      const Vec vy = field.sample_nearest(y);
      const double ang = line_angle(dim, w, vy);
      rep.invariance_residual = std::max(rep.invariance_residual, ang);
    }
  }
  if (rep.invariance_residual > opt.angle_tol)
    throw FoliationNotInvariant(
        "modulus_of_continuity_probe: pushed directions deviate by " +
        format_double(rep.invariance_residual) + " rad (tol " +
        format_double(opt.angle_tol) + ")");

  // Lazy inverses for negative letters.
  std::vector<FourierMap> inv(family.size());
  std::vector<char> have_inv(family.size(), 0);
  auto inverse_of = [&](int axis) -> const FourierMap& {
    if (!have_inv[axis]) {
      InvertOptions io;
      io.grid = default_grid(dim);
      inv[axis] = invert(family[axis], io).inv;
      have_inv[axis] = 1;
    }
    return inv[axis];
  };

  const std::size_t np = field.npoints();
  for (const NetWord& word : words) {
    MocRow row;
    row.p = word.p;
    row.gamma_norm = word.torus_norm;
    double worst = 0.0;
    for (std::size_t fl = 0; fl < np; ++fl) {
      Vec x = flat_point(dim, field.G, fl);
      Vec v = zero_vec();
      for (int a = 0; a < dim; ++a) v[a] = field.at(fl)[a];
      // Chain rule along the word, letters taken in axis order.
      for (int axis = 0; axis < m; ++axis) {
        const std::int64_t reps = word.p[axis];
        if (reps == 0) continue;
        const FourierMap& f = reps > 0 ? family[axis] : inverse_of(axis);
        for (std::int64_t r = 0; r < std::llabs(reps); ++r) {
          if (!f.modes().empty()) {
            eval_periodic_jac(f, x.data(), val, jac, ws);
            Vec w = v;
            for (int a = 0; a < dim; ++a) {
              double s2 = v[a];
              for (int b = 0; b < dim; ++b) s2 += jac[a * dim + b] * v[b];
              w[a] = s2;
            }
            v = w;
          }
          x = advance(f, x, ws);
        }
      }
      const Vec vy = field.sample_nearest(x);
      worst = std::max(worst, std::abs(dot(dim, v, vy) - 1.0));
    }
    row.deviation = worst;
    rep.rows.push_back(std::move(row));
  }

  std::stable_sort(rep.rows.begin(), rep.rows.end(),
                   [](const MocRow& a, const MocRow& b) {
                     return a.gamma_norm > b.gamma_norm;
                   });

  std::vector<double> ts;
  std::vector<double> ds;
  for (const MocRow& r : rep.rows) {
    if (r.gamma_norm > 0.0 && r.deviation > 0.0) {
      ts.push_back(r.gamma_norm);
      ds.push_back(r.deviation);
    }
  }
  if (ts.size() >= 3) {
    const LineFit fit = fit_loglog(ts, ds);
    rep.nu = fit.slope;
    rep.c_fit = std::exp(fit.intercept);
    rep.fit_residual = fit.residual;
    rep.fit_valid = fit.points >= 3;
  }
  return rep;
}

}  // namespace abctorus
