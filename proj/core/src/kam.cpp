#include "abctorus/kam.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>

#include "abctorus/errors.hpp"
#include "abctorus/grid.hpp"

namespace abctorus {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

// Enumerates the canonical half (first nonzero entry positive) of the cube
// ||n||_inf <= J, excluding n = 0.
template <typename Fn>
void for_each_half_cube(int dim, int J, Fn&& fn) {
  IVec n = zero_ivec();
  if (dim == 1) {
    for (int a = 1; a <= J; ++a) {
      n[0] = a;
      fn(n);
    }
    return;
  }
  if (dim == 2) {
    for (int a = 1; a <= J; ++a)
      for (int b = -J; b <= J; ++b) {
        n[0] = a;
        n[1] = b;
        fn(n);
      }
    n[0] = 0;
    for (int b = 1; b <= J; ++b) {
      n[1] = b;
      fn(n);
    }
    return;
  }
  for (int a = 1; a <= J; ++a)
    for (int b = -J; b <= J; ++b)
      for (int c = -J; c <= J; ++c) {
        n = {a, b, c};
        fn(n);
      }
  for (int b = 1; b <= J; ++b)
    for (int c = -J; c <= J; ++c) {
      n = {0, b, c};
      fn(n);
    }
  for (int c = 1; c <= J; ++c) {
    n = {0, 0, c};
    fn(n);
  }
}

// <rho_k, n> with the k-th column of rho.
double column_dot(const RotationMatrix& rho, int k, const IVec& n, int dim) {
  double s = 0.0;
  for (int i = 0; i < dim; ++i) s += rho.at(i, k) * static_cast<double>(n[i]);
  return s;
}

// Picks the generator with the largest divisor |e^{2 pi i theta_k} - 1|,
// ties to the smaller index. Returns the winning index; the magnitude is
// 2 sin(pi dist(theta, Z)).
int select_generator(const RotationMatrix& rho, const IVec& n, int dim,
                     int nmaps, double* best_dist) {
  int kbest = 0;
  double dbest = -1.0;
  for (int k = 0; k < nmaps; ++k) {
    const double d = dist_to_int(column_dot(rho, k, n, dim));
    if (d > dbest) {
      dbest = d;
      kbest = k;
    }
  }
  *best_dist = dbest;
  return kbest;
}

std::complex<double> unit_divisor(double theta) {
  const double a = kTwoPi * theta;
  return {std::cos(a) - 1.0, std::sin(a)};
}

// Fixed generic start point for rotation-vector orbits.
Vec orbit_start() { return {0.29384751938475194, 0.61377261837261837, 0.15428944298574286}; }

// Weighted Birkhoff mean of the lifted displacement along the orbit of T,
// minus the target rotation vector. The exponential bump weights give
// super-polynomial convergence on quasi-periodic orbits, so ~2^14 steps pin
// the rotation vector far below the remainder sizes the sweeps care about.
Vec rotation_drift(const FourierMap& T, const Vec& rho_col, int steps) {
  const int dim = T.dim();
  Vec x = orbit_start();
  EvalScratch ws;
  double p[kMaxDim] = {0.0, 0.0, 0.0};
  double wsum = 0.0;
  Vec acc = zero_vec();
  for (int i = 0; i < steps; ++i) {
    const double t = (i + 1.0) / (steps + 1.0);
    const double w = std::exp(-1.0 / (t * (1.0 - t)));
    eval_periodic(T, x.data(), p, ws);
    wsum += w;
    for (int a = 0; a < dim; ++a) {
      const double d = T.constant()[a] + p[a];
      acc[a] += w * d;
      x[a] = mod1(x[a] + d);
    }
  }
  Vec drift = zero_vec();
  for (int a = 0; a < dim; ++a) drift[a] = acc[a] / wsum - rho_col[a];
  return drift;
}

void validate_family(const std::vector<FourierMap>& maps,
                     const RotationMatrix& rho) {
  if (maps.empty())
    throw ConfigInvalid("need at least one near-translation generator");
  const int dim = rho.dim();
  if (static_cast<int>(maps.size()) > dim)
    throw ConfigInvalid("more generators than rotation columns");
  for (const auto& m : maps) {
    if (m.dim() != dim)
      throw DimensionMismatch("generator dimension does not match rho");
    if (!mat_equal(dim, m.linear(), identity_imat()))
      throw ConfigInvalid(
          "generators must have identity linear part (translation block)");
  }
}

struct IVecLess {
  bool operator()(const IVec& a, const IVec& b) const {
    for (int i = 0; i < kMaxDim; ++i) {
      if (a[i] != b[i]) return a[i] < b[i];
    }
    return false;
  }
};

// Evaluates f (which must have identity linear part) at np lifted points,
// in place: pts <- pts + c + P(pts).
void apply_near_translation(const FourierMap& f, std::vector<double>& pts,
                            std::size_t np) {
  const int dim = f.dim();
  std::vector<double> per(np * static_cast<std::size_t>(dim));
  f.periodic_batch(pts.data(), np, per.data());
  const Vec& c = f.constant();
  for (std::size_t p = 0; p < np; ++p)
    for (int a = 0; a < dim; ++a)
      pts[p * dim + a] += c[a] + per[p * dim + a];
}

// Honest conjugation residual: max over generators, grid points and
// components of dist(h(T_k(h^{-1}(x))) - x - rho_k, Z), with h^{-1} the
// separately inverted conjugacy (so truncation errors in the inverse are
// charged to the residual, not hidden).
double conjugation_residual(const FourierMap& h, const FourierMap& hinv,
                            const std::vector<FourierMap>& maps,
                            const RotationMatrix& rho, int G) {
  const int dim = h.dim();
  const GridFunction base = sample_periodic(hinv, G);
  const std::size_t np = base.npoints();
  std::vector<double> pts(np * static_cast<std::size_t>(dim));
  for (std::size_t p = 0; p < np; ++p) {
    const Vec x = base.point(p);
    for (int a = 0; a < dim; ++a)
      pts[p * dim + a] = x[a] + hinv.constant()[a] + base.at(p)[a];
  }
  double worst = 0.0;
  for (std::size_t k = 0; k < maps.size(); ++k) {
    std::vector<double> y = pts;
    apply_near_translation(maps[k], y, np);
    apply_near_translation(h, y, np);
    const Vec rk = rho.column(static_cast<int>(k));
    for (std::size_t p = 0; p < np; ++p) {
      const Vec x = base.point(p);
      for (int a = 0; a < dim; ++a)
        worst = std::max(worst, dist_to_int(y[p * dim + a] - x[a] - rk[a]));
    }
  }
  return worst;
}

}  // namespace

FourierMap cohomological_solve(const std::vector<FourierMap>& maps,
                               const RotationMatrix& rho, int cutoff,
                               const CohomologicalOptions& opt,
                               CohomologicalReport* report) {
  validate_family(maps, rho);
  if (cutoff < 1) throw ConfigInvalid("cohomological cutoff must be >= 1");
  const int dim = rho.dim();
  const int nmaps = static_cast<int>(maps.size());

  // Scan the whole truncated ball against the divisor floor, independently
  // of where the remainder has mass: an exact resonance makes the truncated
  // equation unsolvable in principle, not just at the populated modes.
  double min_div = 2.0;
  IVec min_at = zero_ivec();
  for_each_half_cube(dim, cutoff, [&](const IVec& n) {
    double dist = 0.0;
    select_generator(rho, n, dim, nmaps, &dist);
    const double div = 2.0 * std::sin(3.141592653589793238462643 * dist);
    if (div < min_div) {
      min_div = div;
      min_at = n;
    }
  });
  if (min_div < opt.divisor_floor) {
    std::string where = "(";
    for (int i = 0; i < dim; ++i)
      where += (i ? "," : "") + std::to_string(min_at[i]);
    where += ")";
    throw SmallDivisorBreakdown("divisor " + format_double(min_div) +
                                " at frequency " + where +
                                " inside cutoff " + std::to_string(cutoff));
  }

  // Union of the stored modes, one coefficient slot per generator.
  std::map<IVec, std::array<CVec, kMaxDim>, IVecLess> pooled;
  for (int k = 0; k < nmaps; ++k) {
    for (const Mode& md : maps[k].modes()) {
      if (ivec_norm_inf(dim, md.n) > cutoff) continue;
      pooled[md.n][k] = md.c;
    }
  }

  double solve_res = 0.0;
  double cross_res = 0.0;
  std::vector<Mode> out;
  out.reserve(pooled.size());
  for (const auto& [n, coeffs] : pooled) {
    double dist = 0.0;
    const int ksel = select_generator(rho, n, dim, nmaps, &dist);
    const std::complex<double> div =
        unit_divisor(column_dot(rho, ksel, n, dim));
    Mode h;
    h.n = n;
    bool nonzero = false;
    for (int a = 0; a < dim; ++a) {
      h.c[a] = -coeffs[ksel][a] / div;
      if (std::abs(h.c[a]) > 0.0) nonzero = true;
      solve_res = std::max(solve_res, std::abs(h.c[a] * div + coeffs[ksel][a]));
    }
    for (int j = 0; j < nmaps; ++j) {
      if (j == ksel) continue;
      const std::complex<double> dj = unit_divisor(column_dot(rho, j, n, dim));
      for (int a = 0; a < dim; ++a)
        cross_res = std::max(cross_res, std::abs(h.c[a] * dj + coeffs[j][a]));
    }
    if (nonzero) out.push_back(h);
  }

  if (report) {
    report->min_divisor = min_div;
    report->min_divisor_at = min_at;
    report->solve_residual = solve_res;
    report->cross_residual = cross_res;
    report->modes_solved = static_cast<int>(out.size());
  }
  return FourierMap(dim, IMat{}, zero_vec(), std::move(out));
}

double kam_epsilon(const std::vector<FourierMap>& maps,
                   const RotationMatrix& rho, int grid) {
  validate_family(maps, rho);
  const int dim = rho.dim();
  const int G = grid > 0 ? grid : default_grid(dim);
  double eps = 0.0;
  for (std::size_t k = 0; k < maps.size(); ++k) {
    Vec d = maps[k].constant();
    const Vec rk = rho.column(static_cast<int>(k));
    for (int a = 0; a < dim; ++a) d[a] -= rk[a];
    eps = std::max(eps, norm_inf(dim, d) + norm_ck(maps[k], 1, G));
  }
  return eps;
}

KamState kam_init(const std::vector<FourierMap>& maps,
                  const RotationMatrix& rho, const KamConfig& cfg) {
  validate_family(maps, rho);
  KamState st;
  st.dim = rho.dim();
  st.grid = cfg.grid > 0 ? cfg.grid : default_grid(st.dim);
  st.iterate = 0;
  st.cutoff = std::min(cfg.initial_cutoff, st.grid / 2 - 1);
  if (st.cutoff < 1) throw ConfigInvalid("grid too small for any cutoff");
  st.maps = maps;
  st.rho = rho;
  st.conjugacy = FourierMap::identity(st.dim);
  st.epsilon = kam_epsilon(maps, rho, st.grid);
  if (st.epsilon >= cfg.basin)
    throw ConfigInvalid("initial remainder " + format_double(st.epsilon) +
                        " is outside the contraction basin " +
                        format_double(cfg.basin));
  return st;
}

KamState kam_step(const KamState& state, const KamConfig& cfg,
                  KamIterate* row) {
  if (state.maps.empty())
    throw ConfigInvalid("kam_step on an empty state; use kam_init");
  if (state.epsilon >= cfg.basin) {
    if (state.iterate == 0)
      throw ConfigInvalid("remainder outside the contraction basin");
    throw DivergenceDetected("remainder " + format_double(state.epsilon) +
                             " left the contraction basin after sweep " +
                             std::to_string(state.iterate));
  }

  CohomologicalReport crep;
  const FourierMap H = cohomological_solve(
      state.maps, state.rho, state.cutoff, {cfg.divisor_floor}, &crep);
  const FourierMap h(state.dim, identity_imat(), zero_vec(), H.modes());

  InvertOptions iopt;
  iopt.grid = state.grid;
  iopt.prune_tol = cfg.prune_tol;
  const InvertResult hinv = invert(h, iopt);

  ComposeOptions copt;
  copt.grid = state.grid;
  copt.out_degree = -1;  // conjugate at the full resolvable band
  copt.prune_tol = cfg.prune_tol;

  KamState next;
  next.dim = state.dim;
  next.grid = state.grid;
  next.iterate = state.iterate + 1;
  next.rho = state.rho;
  next.maps.reserve(state.maps.size());

  double drift_max = 0.0;
  for (std::size_t k = 0; k < state.maps.size(); ++k) {
    ComposeResult mid = compose(state.maps[k], hinv.inv, copt);
    ComposeResult conj = compose(h, mid.map, copt);
    // Pin the rotation vector: subtract the measured drift of the zero mode
    // so rho is preserved exactly across sweeps (it is never recomputed).
    const Vec delta = rotation_drift(
        conj.map, state.rho.column(static_cast<int>(k)), cfg.orbit_length);
    Vec neg = zero_vec();
    for (int a = 0; a < state.dim; ++a) neg[a] = -delta[a];
    conj.map.shift_constant(neg);
    drift_max = std::max(drift_max, norm_inf(state.dim, delta));
    next.maps.push_back(std::move(conj.map));
  }
  next.conjugacy = compose(h, state.conjugacy, copt).map;
  next.epsilon = kam_epsilon(next.maps, next.rho, next.grid);

  const double growth = std::pow(static_cast<double>(state.cutoff), 1.5);
  next.cutoff = std::min(static_cast<int>(std::ceil(growth)),
                         state.grid / 2 - 1);
  next.rising_streak =
      next.epsilon > state.epsilon ? state.rising_streak + 1 : 0;

  if (row) {
    row->index = next.iterate;
    row->cutoff = state.cutoff;
    row->epsilon = next.epsilon;
    row->solve_residual = crep.solve_residual;
    row->cross_residual = crep.cross_residual;
    row->min_divisor = crep.min_divisor;
    row->drift = drift_max;
  }

  if (next.rising_streak >= 3)
    throw DivergenceDetected(
        "remainder grew over three consecutive sweeps, last " +
        format_double(next.epsilon));
  return next;
}

KamResult kam_run(const std::vector<FourierMap>& maps,
                  const RotationMatrix& rho, const KamConfig& cfg) {
  validate_family(maps, rho);
  const int dim = rho.dim();
  const int nmaps = static_cast<int>(maps.size());

  // Commutation precheck at random sample points, all pairs. Hypothesis
  // checks come before the basin gate: a non-commuting family is wrong for
  // this method no matter how small its remainder is.
  Rng rng(cfg.seed);
  for (int j = 0; j < nmaps; ++j)
    for (int k = j + 1; k < nmaps; ++k) {
      double worst = 0.0;
      for (int s = 0; s < cfg.commutation_samples; ++s) {
        Vec x = zero_vec();
        for (int a = 0; a < dim; ++a) x[a] = rng.uniform();
        const Vec jk = maps[j].evaluate(maps[k].evaluate(x));
        const Vec kj = maps[k].evaluate(maps[j].evaluate(x));
        worst = std::max(worst, torus_dist(dim, jk, kj));
      }
      if (worst > cfg.commutation_tol)
        throw NotCommuting("generators " + std::to_string(j) + " and " +
                           std::to_string(k) + " disagree by " +
                           format_double(worst) + " at sample points");
    }

  KamState st = kam_init(maps, rho, cfg);

  KamReport report;
  // Certificate of the rotation columns; recorded for the report. A resonant
  // rho is not rejected here: it surfaces as SmallDivisorBreakdown in the
  // first solve, which identifies the offending frequency.
  {
    std::vector<Vec> cols;
    for (int k = 0; k < nmaps; ++k) cols.push_back(rho.column(k));
    report.certificate = sdc_check(cols, dim, cfg.rho_tau, cfg.rho_scan);
  }
  report.initial_epsilon = st.epsilon;

  bool converged = st.epsilon <= cfg.target;
  if (converged) {
    report.termination = "trivial";
  } else {
    for (int i = 0; i < cfg.max_iterations; ++i) {
      KamIterate rowbuf;
      st = kam_step(st, cfg, &rowbuf);
      report.table.push_back(rowbuf);
      if (st.epsilon <= cfg.target) {
        converged = true;
        break;
      }
    }
    if (!converged)
      throw IterationCap("remainder " + format_double(st.epsilon) +
                         " still above target " + format_double(cfg.target) +
                         " after " + std::to_string(cfg.max_iterations) +
                         " sweeps");
    report.termination = "converged";
  }
  report.converged = true;
  report.final_epsilon = st.epsilon;

  InvertOptions iopt;
  iopt.grid = st.grid;
  iopt.prune_tol = cfg.prune_tol;
  const InvertResult hinv = invert(st.conjugacy, iopt);
  report.inverse_residual = hinv.residual;
  report.final_residual =
      conjugation_residual(st.conjugacy, hinv.inv, maps, rho, st.grid);

  KamResult out;
  out.conjugacy = st.conjugacy;
  out.conjugated = st.maps;
  out.report = report;
  return out;
}

AnosovLinearization linearize_anosov(const FourierMap& A, const FourierMap& h,
                                     const IntMatrix& Abar,
                                     const RotationMatrix& rho,
                                     const LinearizeOptions& opt) {
  const int dim = Abar.dim();
  if (A.dim() != dim || h.dim() != dim || rho.dim() != dim)
    throw DimensionMismatch("linearization inputs live on different tori");
  if (!mat_equal(dim, A.linear(), Abar.entries()))
    throw ConfigInvalid("hyperbolic generator's linear part is not Abar");
  if (!mat_equal(dim, h.linear(), identity_imat()))
    throw ConfigInvalid("conjugacy must have identity linear part");

  DMat s{};
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j)
      s[i][j] = (i == j ? 1.0 : 0.0) - static_cast<double>(Abar.at(i, j));
  if (std::abs(dmat_det(dim, s)) < 1e-9)
    throw ConfigInvalid("id - Abar is singular; the constant cannot be "
                        "absorbed by a translation");
  const DMat sinv = dmat_inverse(dim, s);

  const int G = opt.grid > 0 ? opt.grid : default_grid(dim);
  InvertOptions iopt;
  iopt.grid = G;
  const InvertResult hb = invert(h, iopt);

  // F(x) = h(A(h^{-1}(x))) - Abar x on the grid, all lifts kept, so F is a
  // continuous periodic function with no wrap ambiguity.
  const GridFunction base = sample_periodic(hb.inv, G);
  const std::size_t np = base.npoints();
  std::vector<double> y(np * static_cast<std::size_t>(dim));
  for (std::size_t p = 0; p < np; ++p) {
    const Vec x = base.point(p);
    for (int a = 0; a < dim; ++a)
      y[p * dim + a] = x[a] + hb.inv.constant()[a] + base.at(p)[a];
  }
  // z = A(y) lifted: Abar y + c_A + P_A(y).
  std::vector<double> per(np * static_cast<std::size_t>(dim));
  A.periodic_batch(y.data(), np, per.data());
  std::vector<double> z(np * static_cast<std::size_t>(dim));
  for (std::size_t p = 0; p < np; ++p)
    for (int a = 0; a < dim; ++a) {
      double v = A.constant()[a] + per[p * dim + a];
      for (int b = 0; b < dim; ++b)
        v += static_cast<double>(Abar.at(a, b)) * y[p * dim + b];
      z[p * dim + a] = v;
    }
  // w = h(z) lifted, then F = w - Abar x. Compensated mean: the constant we
  // extract feeds a translation that must cancel to machine precision.
  h.periodic_batch(z.data(), np, per.data());
  std::vector<double> F(np * static_cast<std::size_t>(dim));
  Vec mean = zero_vec();
  Vec comp = zero_vec();
  for (std::size_t p = 0; p < np; ++p) {
    const Vec x = base.point(p);
    for (int a = 0; a < dim; ++a) {
      double v = z[p * dim + a] + h.constant()[a] + per[p * dim + a];
      for (int b = 0; b < dim; ++b)
        v -= static_cast<double>(Abar.at(a, b)) * x[b];
      F[p * dim + a] = v;
      const double yk = v - comp[a];
      const double tk = mean[a] + yk;
      comp[a] = (tk - mean[a]) - yk;
      mean[a] = tk;
    }
  }
  for (int a = 0; a < dim; ++a) mean[a] /= static_cast<double>(np);

  double variation = 0.0;
  for (std::size_t p = 0; p < np; ++p)
    for (int a = 0; a < dim; ++a)
      variation = std::max(variation, std::abs(F[p * dim + a] - mean[a]));

  // Invariance of F under the rotation columns, probed pointwise off-grid.
  double trans_res = 0.0;
  {
    const auto eval_F = [&](const Vec& x) {
      Vec yy = hb.inv.evaluate(x, true);
      Vec zz = A.evaluate(yy, true);
      Vec ww = h.evaluate(zz, true);
      Vec out = zero_vec();
      for (int a = 0; a < dim; ++a) {
        double v = ww[a];
        for (int b = 0; b < dim; ++b)
          v -= static_cast<double>(Abar.at(a, b)) * x[b];
        out[a] = v;
      }
      return out;
    };
    Rng rng(0x6b616d);
    for (int sidx = 0; sidx < opt.samples; ++sidx) {
      Vec x = zero_vec();
      for (int a = 0; a < dim; ++a) x[a] = rng.uniform();
      const Vec fx = eval_F(x);
      for (int j = 0; j < dim; ++j) {
        Vec xs = x;
        const Vec rj = rho.column(j);
        for (int a = 0; a < dim; ++a) xs[a] = mod1(xs[a] + rj[a]);
        const Vec fs = eval_F(xs);
        for (int a = 0; a < dim; ++a)
          trans_res = std::max(trans_res, std::abs(fs[a] - fx[a]));
      }
    }
  }

  if (variation > opt.tol)
    throw NotConstant("conjugated hyperbolic generator deviates from affine "
                      "by " + format_double(variation) +
                      " (tolerance " + format_double(opt.tol) + ")");

  AnosovLinearization out;
  out.f0 = mean;
  out.variation = variation;
  out.translation_residual = trans_res;
  out.corrected = h;
  Vec shift = zero_vec();
  for (int a = 0; a < dim; ++a) {
    double v = 0.0;
    for (int b = 0; b < dim; ++b) v += sinv[a][b] * mean[b];
    shift[a] = -v;
  }
  out.corrected.shift_constant(shift);
  return out;
}

}  // namespace abctorus
