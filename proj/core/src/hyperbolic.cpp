#include "abctorus/hyperbolic.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "abctorus/errors.hpp"
#include "abctorus/torus_ops.hpp"
#include "word_walk.hpp"

namespace abctorus {

namespace {

using Cplx = std::complex<double>;

using detail::advance;
using detail::displacement;
using detail::flat_point;
using detail::imat_identity;
using detail::is_identity_linear;
using detail::normalize_vec;
using detail::pow_size;
using detail::reduce_vec;
using detail::require_identity_family;
using detail::snake_ball;
using detail::WordWalker;

IMat imat_transpose(int dim, const IMat& m) {
  IMat t{};
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) t[i][j] = m[j][i];
  return t;
}

IVec ivec_apply(int dim, const IMat& m, const IVec& v) {
  IVec out = zero_ivec();
  for (int i = 0; i < dim; ++i) {
    std::int64_t s = 0;
    for (int j = 0; j < dim; ++j) s += m[i][j] * v[j];
    out[i] = static_cast<int>(s);
  }
  return out;
}

struct IVecLess {
  bool operator()(const IVec& a, const IVec& b) const {
    for (int i = 0; i < kMaxDim; ++i) {
      if (a[i] != b[i]) return a[i] < b[i];
    }
    return false;
  }
};

Eigen::MatrixXd to_eigen(int dim, const IMat& m) {
  Eigen::MatrixXd e(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) e(i, j) = static_cast<double>(m[i][j]);
  return e;
}

bool canonical_freq(int dim, const IVec& n) {
  for (int a = 0; a < dim; ++a) {
    if (n[a] > 0) return true;
    if (n[a] < 0) return false;
  }
  return false;  // the zero frequency is not a stored mode
}

using CoeffTable = std::map<IVec, CVec, IVecLess>;

/// Full-spectrum coefficient at frequency n from a canonical-half table.
CVec full_coeff(int dim, const CoeffTable& tab, const IVec& n) {
  CVec zero{};
  if (canonical_freq(dim, n)) {
    auto it = tab.find(n);
    return it == tab.end() ? zero : it->second;
  }
  IVec neg = zero_ivec();
  for (int a = 0; a < dim; ++a) neg[a] = -n[a];
  auto it = tab.find(neg);
  if (it == tab.end()) return zero;
  CVec c{};
  for (int a = 0; a < dim; ++a) c[a] = std::conj(it->second[a]);
  return c;
}

}  // namespace

// ---------------------------------------------------------------------------
// Spectral data
// ---------------------------------------------------------------------------

SpectralData spectral_data(const IntMatrix& m) {
  const int dim = m.dim();
  Eigen::EigenSolver<Eigen::MatrixXd> es(to_eigen(dim, m.entries()));
  std::vector<std::pair<Cplx, CVec>> st, un;
  for (int i = 0; i < dim; ++i) {
    const Cplx lam = es.eigenvalues()(i);
    const double mod = std::abs(lam);
    if (std::abs(mod - 1.0) < 1e-9)
      throw NoHyperbolicity("eigenvalue of modulus " + format_double(mod) +
                            " lies within 1e-9 of the unit circle");
    CVec v{};
    for (int r = 0; r < dim; ++r) v[r] = es.eigenvectors()(r, i);
    (mod < 1.0 ? st : un).emplace_back(lam, v);
  }
  // stable sorted descending by modulus (front = weakest contraction),
  // unstable ascending (front = weakest expansion)
  std::sort(st.begin(), st.end(), [](const auto& a, const auto& b) {
    return std::abs(a.first) > std::abs(b.first);
  });
  std::sort(un.begin(), un.end(), [](const auto& a, const auto& b) {
    return std::abs(a.first) < std::abs(b.first);
  });
  SpectralData out;
  out.dim = dim;
  for (auto& [lam, v] : st) {
    out.stable.push_back(lam);
    out.stable_vecs.push_back(v);
  }
  for (auto& [lam, v] : un) {
    out.unstable.push_back(lam);
    out.unstable_vecs.push_back(v);
  }
  return out;
}

double c_slow_bound(const SpectralData& a, const SpectralData& b) {
  if (a.stable.empty() || a.unstable.empty() || b.stable.empty() ||
      b.unstable.empty())
    throw ConfigInvalid(
        "slow-oscillation bound needs stable and unstable spectrum on both "
        "matrices");
  const double ru = std::log(std::abs(a.unstable.front())) /
                    std::log(std::abs(b.unstable.back()));
  const double rs = std::log(std::abs(a.stable.front())) /
                    std::log(std::abs(b.stable.back()));
  return std::min(ru, rs);
}

// ---------------------------------------------------------------------------
// Topological conjugacy of a perturbed hyperbolic automorphism
// ---------------------------------------------------------------------------

Vec FranksConjugacy::periodic(const Vec& x) const {
  std::array<Cplx, kMaxDim> q{};
  EvalScratch ws_a, ws_i;

  bool any_un = false, any_st = false;
  for (int i = 0; i < dim; ++i) {
    if (std::abs(eigenvalues[i]) > 1.0)
      any_un = true;
    else
      any_st = true;
  }

  // Expanding directions: q_i = sum_{j>=0} lambda_i^{-(j+1)} w_i(A^j x),
  // where w = V^{-1} (c + P) is the displacement in the eigenbasis.
  if (any_un) {
    std::array<Cplx, kMaxDim> fac{};
    for (int i = 0; i < dim; ++i)
      if (std::abs(eigenvalues[i]) > 1.0) fac[i] = 1.0 / eigenvalues[i];
    Vec yv = reduce_vec(dim, x);
    for (int j = 0; j < depth; ++j) {
      const Vec d = displacement(map_a, yv, ws_a);
      for (int i = 0; i < dim; ++i) {
        if (std::abs(eigenvalues[i]) <= 1.0) continue;
        Cplx w = 0;
        for (int a = 0; a < dim; ++a) w += basis_inv[i][a] * d[a];
        q[i] += fac[i] * w;
        fac[i] /= eigenvalues[i];
      }
      if (j + 1 < depth) {
        const Vec lin = mat_apply(dim, map_a.linear(), yv);
        for (int a = 0; a < dim; ++a) yv[a] = mod1(lin[a] + d[a]);
      }
    }
  }

  // Contracting directions: q_i = -sum_{j>=1} lambda_i^{j-1} w_i(A^{-j} x).
  if (any_st) {
    std::array<Cplx, kMaxDim> fac{};
    for (int i = 0; i < dim; ++i)
      if (std::abs(eigenvalues[i]) < 1.0) fac[i] = 1.0;
    Vec zv = reduce_vec(dim, x);
    for (int j = 1; j <= depth; ++j) {
      zv = advance(map_a_inv, zv, ws_i);
      const Vec d = displacement(map_a, zv, ws_a);
      for (int i = 0; i < dim; ++i) {
        if (std::abs(eigenvalues[i]) >= 1.0) continue;
        Cplx w = 0;
        for (int a = 0; a < dim; ++a) w += basis_inv[i][a] * d[a];
        q[i] -= fac[i] * w;
        fac[i] *= eigenvalues[i];
      }
    }
  }

  Vec g = zero_vec();
  for (int a = 0; a < dim; ++a) {
    Cplx s = 0;
    for (int i = 0; i < dim; ++i) s += basis[a][i] * q[i];
    g[a] = s.real();
  }
  return g;
}

Vec FranksConjugacy::evaluate(const Vec& x) const {
  const Vec g = periodic(x);
  Vec y = zero_vec();
  for (int a = 0; a < dim; ++a) y[a] = x[a] + g[a];
  return y;
}

Vec FranksConjugacy::inverse(const Vec& y, double tol, int max_iter) const {
  Vec x = y;
  double best = std::numeric_limits<double>::infinity();
  for (int it = 0; it < max_iter; ++it) {
    const Vec g = periodic(x);
    Vec resid = zero_vec();
    double rn = 0, delta = 0;
    for (int a = 0; a < dim; ++a) {
      resid[a] = x[a] + g[a] - y[a];  // h(x) - y
      rn = std::max(rn, std::abs(resid[a]));
    }
    if (rn <= tol) return x;
    // damped correction: full steps while progress holds, halving otherwise
    double t = rn < best ? 1.0 : 0.5;
    best = std::min(best, rn);
    for (int a = 0; a < dim; ++a) {
      const double step = -t * resid[a];
      delta = std::max(delta, std::abs(step));
      x[a] += step;
    }
    if (delta <= tol * 0.25 && rn <= 16 * tol) return x;
  }
  throw IterationCap("conjugacy inverse iteration stalled above tolerance " +
                     format_double(tol));
}

FranksConjugacy franks_conjugacy(const FourierMap& a, const IntMatrix& abar,
                                 const FranksOptions& opt) {
  const int dim = a.dim();
  if (abar.dim() != dim)
    throw DimensionMismatch("conjugacy: map and model dimensions differ");
  if (!mat_equal(dim, a.linear(), abar.entries()))
    throw ConfigInvalid(
        "conjugacy: the map's linear part must equal the hyperbolic model");
  const SpectralData sd = spectral_data(abar);
  if (sd.stable.empty() || sd.unstable.empty())
    throw NoHyperbolicity(
        "conjugacy: model needs both expansion and contraction");

  const int G = opt.grid > 0 ? opt.grid : default_grid(dim);

  // Contractivity gate: C1 size of the periodic part against the spectral
  // gap. The geometric series converges for any hyperbolic model, but the
  // result is a homeomorphism near the identity only in this regime.
  const double c0 = norm_c0(a, G);
  const double dp = std::max(0.0, norm_ck(a, 1, G) - c0);
  const double gap = std::min(std::abs(sd.unstable.front()) - 1.0,
                              1.0 - std::abs(sd.stable.front()));
  const double kappa = dp / gap;
  if (kappa >= 1.0)
    throw NotContractive(
        "conjugacy: periodic part too large for the spectral gap, factor " +
        format_double(kappa));

  FranksConjugacy h;
  h.dim = dim;
  h.abar = abar.entries();
  h.map_a = a;
  h.contraction = kappa;
  {
    InvertOptions io;
    io.grid = G;
    h.map_a_inv = invert(a, io).inv;
  }

  Eigen::EigenSolver<Eigen::MatrixXd> es(to_eigen(dim, abar.entries()));
  Eigen::MatrixXcd basis = es.eigenvectors();
  if (std::abs(basis.determinant()) < 1e-6)
    throw Derogatory("conjugacy: eigenbasis of the model is degenerate");
  Eigen::MatrixXcd basis_inv = basis.inverse();
  for (int i = 0; i < dim; ++i) {
    h.eigenvalues[i] = es.eigenvalues()(i);
    for (int r = 0; r < dim; ++r) {
      h.basis[r][i] = basis(r, i);
      h.basis_inv[i][r] = basis_inv(i, r);
    }
  }

  // Series ratio and depth: each term shrinks by max(1/|lambda_u|, |lambda_s|).
  double ratio = 0;
  for (const auto& lam : sd.unstable)
    ratio = std::max(ratio, 1.0 / std::abs(lam));
  for (const auto& lam : sd.stable) ratio = std::max(ratio, std::abs(lam));
  double vnorm = 0;
  for (int i = 0; i < dim; ++i) {
    double row = 0;
    for (int r = 0; r < dim; ++r) row += std::norm(basis_inv(i, r));
    vnorm = std::max(vnorm, std::sqrt(row));
  }
  const double dsup = norm2(dim, a.constant()) + c0;
  const double wsup = vnorm * dsup;
  int depth = opt.depth;
  if (depth <= 0) {
    const double tail_target = 0.02 * opt.tol * (1.0 - ratio);
    if (wsup <= tail_target) {
      depth = 8;
    } else {
      depth = static_cast<int>(
                  std::ceil(std::log(tail_target / wsup) / std::log(ratio))) +
              4;
      depth = std::clamp(depth, 8, 400);
    }
  }
  h.depth = depth;

  // Residual sweep; keeps the grid samples of g for the projection.
  GridFunction gvals(dim, dim, G);
  const std::size_t n = gvals.npoints();
  double worst = 0;
  EvalScratch ws;
  for (std::size_t fl = 0; fl < n; ++fl) {
    const Vec x = gvals.point(fl);
    const Vec gx = h.periodic(x);
    double* out = gvals.at(fl);
    for (int c = 0; c < dim; ++c) out[c] = gx[c];
    const Vec d = displacement(a, x, ws);
    Vec ax = zero_vec();
    {
      const Vec lin = mat_apply(dim, a.linear(), x);
      for (int c = 0; c < dim; ++c) ax[c] = mod1(lin[c] + d[c]);
    }
    const Vec gax = h.periodic(ax);
    const Vec ag = mat_apply(dim, a.linear(), gx);
    for (int c = 0; c < dim; ++c)
      worst = std::max(worst, std::abs(d[c] + gax[c] - ag[c]));
  }
  h.residual = worst;
  if (worst > opt.tol)
    throw IterationCap("conjugacy residual " + format_double(worst) +
                       " exceeds tolerance " + format_double(opt.tol));

  // Band-limited stand-in and its deviation on an offset probe grid.
  GridProjection pr = project_grid(gvals, G / 2 - 1, opt.prune_tol);
  h.projection =
      FourierMap(dim, imat_identity(dim), pr.fn.constant(), pr.fn.modes());
  double tail = 0;
  const int tp = std::max(4, opt.tail_probe);
  const std::size_t tn = pow_size(tp, dim);
  for (std::size_t fl = 0; fl < tn; ++fl) {
    Vec x = flat_point(dim, tp, fl);
    for (int c = 0; c < dim; ++c) x[c] = mod1(x[c] + 0.5 / tp);
    const Vec gt = h.periodic(x);
    const Vec pd = displacement(h.projection, x, ws);
    for (int c = 0; c < dim; ++c)
      tail = std::max(tail, std::abs(gt[c] - pd[c]));
  }
  h.projection_tail = tail;
  return h;
}

FourierMap conjugate_by(const FranksConjugacy& h, const FourierMap& t,
                        int grid, double prune_tol) {
  if (t.dim() != h.dim)
    throw DimensionMismatch("conjugate_by: dimension mismatch");
  if (!is_identity_linear(t))
    throw ConfigInvalid("conjugate_by: map must be homotopic to the identity");
  const int G = grid > 0 ? grid : default_grid(h.dim);
  GridFunction disp(h.dim, h.dim, G);
  const std::size_t n = disp.npoints();
  for (std::size_t fl = 0; fl < n; ++fl) {
    const Vec x = disp.point(fl);
    const Vec yv = h.inverse(x);
    const Vec z = t.evaluate(yv, /*lifted=*/true);
    const Vec gz = h.periodic(z);
    double* out = disp.at(fl);
    for (int a = 0; a < h.dim; ++a) out[a] = z[a] + gz[a] - x[a];
  }
  GridProjection pr = project_grid(disp, G / 2 - 1, prune_tol);
  return FourierMap(h.dim, imat_identity(h.dim), pr.fn.constant(),
                    pr.fn.modes());
}

// ---------------------------------------------------------------------------
// Rotation vectors
// ---------------------------------------------------------------------------

MeasureEstimate rotation_vector(const FourierMap& t, const Vec& x0,
                                int orbit_len) {
  const int dim = t.dim();
  if (!is_identity_linear(t))
    throw ConfigInvalid(
        "rotation vector: map must be homotopic to the identity");
  if (orbit_len < 4) throw ConfigInvalid("rotation vector: orbit too short");

  EvalScratch ws;
  Vec x = reduce_vec(dim, x0);
  Vec acc = zero_vec(), comp = zero_vec();
  std::vector<double> partial(static_cast<std::size_t>(orbit_len) * dim);
  for (int i = 0; i < orbit_len; ++i) {
    const Vec d = displacement(t, x, ws);
    for (int a = 0; a < dim; ++a) {
      const double yk = d[a] - comp[a];
      const double tk = acc[a] + yk;
      comp[a] = (tk - acc[a]) - yk;
      acc[a] = tk;
      partial[static_cast<std::size_t>(i) * dim + a] = acc[a];
      x[a] = mod1(x[a] + d[a]);
    }
  }

  MeasureEstimate me;
  me.base = reduce_vec(dim, x0);
  me.orbit_len = orbit_len;
  for (int a = 0; a < dim; ++a) me.rotation[a] = acc[a] / orbit_len;
  double err = 0;
  for (int i = 3 * orbit_len / 4; i < orbit_len; ++i)
    for (int a = 0; a < dim; ++a)
      err = std::max(
          err, std::abs(partial[static_cast<std::size_t>(i) * dim + a] /
                            (i + 1) -
                        me.rotation[a]));
  me.error_bar = err;
  return me;
}

// ---------------------------------------------------------------------------
// Oscillation
// ---------------------------------------------------------------------------

OscillationReport oscillation(const std::vector<FourierMap>& family,
                              const std::vector<IVec>& ps,
                              const OscillationOptions& opt) {
  require_identity_family(family, "oscillation");
  if (family.size() > static_cast<std::size_t>(kMaxDim))
    throw ConfigInvalid("oscillation: at most 3 family maps");
  const int dim = family.front().dim();
  const int G = opt.grid > 0 ? opt.grid : 64;

  WordWalker wk(family, G);
  OscillationReport rep;
  rep.rows.reserve(ps.size());

  // strides of the row-major grid, axis 0 slowest
  std::size_t stride[kMaxDim] = {0, 0, 0};
  {
    std::size_t s = 1;
    for (int a = dim - 1; a >= 0; --a) {
      stride[a] = s;
      s *= static_cast<std::size_t>(G);
    }
  }

  for (const IVec& p : ps) {
    wk.goto_word(p);
    // per-component oscillation, then the worst component: this is the
    // lift-independent quantity (a lift change shifts each component's
    // displacement by a constant integer, cancelling in max - min)
    Vec lo = zero_vec(), hi = zero_vec();
    for (int a = 0; a < dim; ++a) {
      lo[a] = std::numeric_limits<double>::infinity();
      hi[a] = -lo[a];
    }
    for (std::size_t fl = 0; fl < wk.np; ++fl)
      for (int a = 0; a < dim; ++a) {
        const double d = wk.y[fl * dim + a] - wk.base[fl * dim + a];
        lo[a] = std::min(lo[a], d);
        hi[a] = std::max(hi[a], d);
      }
    double osc_val = 0;
    for (int a = 0; a < dim; ++a) osc_val = std::max(osc_val, hi[a] - lo[a]);
    // adjacent-sample variation of the displacement field, for the pad
    double max_adj = 0;
    for (std::size_t fl = 0; fl < wk.np; ++fl) {
      std::size_t rem = fl;
      int k[kMaxDim] = {0, 0, 0};
      for (int a = dim - 1; a >= 0; --a) {
        k[a] = static_cast<int>(rem % G);
        rem /= G;
      }
      for (int b = 0; b < dim; ++b) {
        const std::size_t nb = (k[b] == G - 1)
                                   ? fl - static_cast<std::size_t>(G - 1) * stride[b]
                                   : fl + stride[b];
        for (int a = 0; a < dim; ++a) {
          const double d0 = wk.y[fl * dim + a] - wk.base[fl * dim + a];
          const double d1 = wk.y[nb * dim + a] - wk.base[nb * dim + a];
          // displacement is periodic; a wrap at the seam shows up as a near
          // integer jump and must not enter the variation estimate
          const double diff = std::abs(dist_to_int_signed(d1 - d0));
          max_adj = std::max(max_adj, diff);
        }
      }
    }
    OscillationRow row;
    row.p = p;
    double nn = 0;
    for (int a = 0; a < static_cast<int>(family.size()); ++a)
      nn += static_cast<double>(p[a]) * p[a];
    row.norm = std::sqrt(nn);
    row.osc = osc_val;
    row.osc_upper = osc_val + max_adj * std::sqrt(double(dim)) / 2.0;
    rep.rows.push_back(row);
  }

  std::vector<double> xs, ys;
  for (const auto& r : rep.rows)
    if (r.osc > opt.degenerate_floor && r.norm > 0) {
      xs.push_back(r.norm);
      ys.push_back(r.osc);
    }
  if (xs.size() >= 3) {
    rep.fit = fit_loglog(xs, ys);
    rep.fit_valid = true;
    rep.c_hat = rep.fit.slope;
  }
  if (opt.a != nullptr && opt.b != nullptr)
    rep.c_bound = c_slow_bound(spectral_data(*opt.a), spectral_data(*opt.b));
  return rep;
}

// ---------------------------------------------------------------------------
// Fourier decay of a conjugated family
// ---------------------------------------------------------------------------

DecayReport fourier_decay_diagnostic(const std::vector<FourierMap>& family,
                                     const IntMatrix& abar,
                                     const IntMatrix& bbar, int modes_up_to,
                                     const DecayOptions& opt) {
  require_identity_family(family, "decay");
  const int m = static_cast<int>(family.size());
  if (m > kMaxDim) throw ConfigInvalid("decay: at most 3 family maps");
  const int dim = family.front().dim();
  if (abar.dim() != dim)
    throw DimensionMismatch("decay: hyperbolic model dimension mismatch");
  if (bbar.dim() != m)
    throw DimensionMismatch(
        "decay: coefficient matrix must act on word exponents");
  const int G = opt.grid > 0 ? opt.grid : default_grid(dim);
  if (modes_up_to < 1 || modes_up_to > G / 2 - 1)
    throw ConfigInvalid("decay: mode band must fit the grid");
  if (opt.p_radius < 0) throw ConfigInvalid("decay: negative word radius");

  WordWalker wk(family, G);
  const std::vector<IVec> words = snake_ball(m, opt.p_radius);
  DecayReport rep;
  rep.modes_up_to = modes_up_to;
  rep.rows.reserve(words.size());
  std::map<IVec, CoeffTable, IVecLess> tabs;
  GridFunction disp(dim, dim, G);
  for (const IVec& p : words) {
    wk.goto_word(p);
    for (std::size_t i = 0; i < wk.np * dim; ++i)
      disp.v[i] = wk.y[i] - wk.base[i];
    GridProjection pr = project_grid(disp, modes_up_to, 0.0);
    DecayRow row;
    row.p = p;
    CoeffTable tab;
    for (const Mode& md : pr.fn.modes()) {
      double mag = 0;
      for (int a = 0; a < dim; ++a) mag = std::max(mag, std::abs(md.c[a]));
      if (mag > row.max_mode) {
        row.max_mode = mag;
        row.argmax = md.n;
      }
      if (mag > opt.mode_floor) tab[md.n] = md.c;
    }
    rep.max_nonzero_mode = std::max(rep.max_nonzero_mode, row.max_mode);
    rep.rows.push_back(row);
    tabs.emplace(p, std::move(tab));
  }

  // Intertwining identity: Abar c(Abar^t k, p) = c(k, Bbar^t p) for every
  // frequency k and word p with both sides inside the computed tables.
  const IMat at = imat_transpose(dim, abar.entries());
  const IMat bt = imat_transpose(m, bbar.entries());
  const IMat at_inv = imat_unimodular_inverse(dim, at);
  double worst = 0;
  int pairs = 0;
  for (const auto& [p, tab] : tabs) {
    const IVec p2 = ivec_apply(m, bt, p);
    if (ivec_norm_inf(m, p2) > opt.p_radius) continue;
    const CoeffTable& tab2 = tabs.at(p2);
    for (const auto& [nfreq, c] : tab) {
      const IVec k0 = ivec_apply(dim, at_inv, nfreq);
      if (ivec_norm_inf(dim, k0) > modes_up_to) continue;
      CVec lhs{};
      for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j)
          lhs[i] += static_cast<double>(abar.at(i, j)) * c[j];
      const CVec rhs = full_coeff(dim, tab2, k0);
      double diff = 0;
      for (int a = 0; a < dim; ++a)
        diff = std::max(diff, std::abs(lhs[a] - rhs[a]));
      worst = std::max(worst, diff);
      ++pairs;
    }
  }
  rep.transform_residual = worst;
  rep.pairs_checked = pairs;
  return rep;
}

// ---------------------------------------------------------------------------
// Lyapunov exponents
// ---------------------------------------------------------------------------

LyapunovResult lyapunov_exponents(const FourierMap& t, const Vec& x0,
                                  int orbit_len) {
  const int dim = t.dim();
  if (orbit_len < 1000)
    throw ConfigInvalid("lyapunov: orbit length must be at least 1000");

  Eigen::MatrixXd q = Eigen::MatrixXd::Identity(dim, dim);
  Vec x = reduce_vec(dim, x0);
  std::vector<double> full(dim, 0.0), first(dim, 0.0);
  const int half = orbit_len / 2;
  EvalScratch ws;
  for (int i = 0; i < orbit_len; ++i) {
    double pv[kMaxDim] = {0, 0, 0};
    double jac[kMaxDim * kMaxDim] = {0};
    eval_periodic_jac(t, x.data(), pv, jac, ws);
    Eigen::MatrixXd mat(dim, dim);
    for (int r = 0; r < dim; ++r)
      for (int c = 0; c < dim; ++c)
        mat(r, c) = static_cast<double>(t.linear()[r][c]) + jac[r * dim + c];
    mat = mat * q;
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(mat);
    Eigen::MatrixXd rmat =
        qr.matrixQR().triangularView<Eigen::Upper>();
    q = qr.householderQ() * Eigen::MatrixXd::Identity(dim, dim);
    for (int j = 0; j < dim; ++j) {
      double rjj = rmat(j, j);
      if (rjj < 0) {
        rjj = -rjj;
        q.col(j) *= -1.0;
      }
      const double lg = std::log(std::max(rjj, 1e-300));
      full[j] += lg;
      if (i < half) first[j] += lg;
    }
    const Vec lin = mat_apply(dim, t.linear(), x);
    for (int a = 0; a < dim; ++a)
      x[a] = mod1(lin[a] + t.constant()[a] + pv[a]);
  }

  struct Row {
    double ex, bar;
  };
  std::vector<Row> rows(dim);
  for (int j = 0; j < dim; ++j) {
    const double ex = full[j] / orbit_len;
    const double h1 = first[j] / half;
    const double h2 = (full[j] - first[j]) / (orbit_len - half);
    rows[j] = {ex, std::abs(h1 - h2)};
  }
  std::sort(rows.begin(), rows.end(),
            [](const Row& a, const Row& b) { return a.ex > b.ex; });
  LyapunovResult res;
  res.orbit_len = orbit_len;
  for (const Row& r : rows) {
    res.exponents.push_back(r.ex);
    res.error_bars.push_back(r.bar);
  }
  return res;
}

// ---------------------------------------------------------------------------
// Invariant splitting
// ---------------------------------------------------------------------------

SplittingEstimate splitting_estimate(const FourierMap& a,
                                     const SplittingOptions& opt) {
  const int dim = a.dim();
  IntMatrix lin(dim, a.linear());
  if (!lin.hyperbolic())
    throw NoHyperbolicity("splitting: linear part has no spectral gap");
  const SpectralData sd = spectral_data(lin);
  const int G = opt.grid > 0 ? opt.grid : 64;
  const int iters = std::max(2, opt.iters);
  FourierMap ainv;
  {
    InvertOptions io;
    io.grid = default_grid(dim);
    ainv = invert(a, io).inv;
  }

  // fixed generic seed directions (no eigen-alignment for integer matrices)
  const Vec seed = normalize_vec(
      dim, Vec{0.6303002848193241, 0.7203600826327762, 0.2902846773512197});
  const Vec seed2 = normalize_vec(
      dim, Vec{-0.4419296909542175, 0.8607701356987081, 0.2526370913155474});

  // Push a seed direction forward along the backward orbit of x; the result
  // approximates the expanding direction at x. `change` reports the angle
  // between the full-depth result and the result one orbit step shorter
  // (both ending at x), i.e. the convergence of the iteration itself.
  auto push_unstable = [&](const Vec& x, double* change) -> Vec {
    std::vector<Vec> orbit(static_cast<std::size_t>(iters) + 1);
    orbit[0] = reduce_vec(dim, x);
    EvalScratch ws;
    for (int j = 1; j <= iters; ++j) orbit[j] = advance(ainv, orbit[j - 1], ws);
    Vec v = seed, shorter = seed;
    for (int j = iters; j >= 1; --j) {
      const DMat jac = a.jacobian(orbit[j]);
      v = normalize_vec(dim, mat_apply(dim, jac, v));
      if (j <= iters - 1)
        shorter = normalize_vec(dim, mat_apply(dim, jac, shorter));
    }
    if (change) *change = line_angle(dim, shorter, v);
    return v;
  };
  // Pull a seed direction back along the forward orbit of x; approximates
  // the contracting direction at x, with the same convergence report.
  auto pull_stable = [&](const Vec& x, double* change) -> Vec {
    std::vector<Vec> orbit(static_cast<std::size_t>(iters));
    orbit[0] = reduce_vec(dim, x);
    EvalScratch ws;
    for (int j = 1; j < iters; ++j) orbit[j] = advance(a, orbit[j - 1], ws);
    Vec v = seed, shorter = seed;
    for (int j = iters - 1; j >= 0; --j) {
      const DMat jinv = dmat_inverse(dim, a.jacobian(orbit[j]));
      v = normalize_vec(dim, mat_apply(dim, jinv, v));
      if (j <= iters - 2)
        shorter = normalize_vec(dim, mat_apply(dim, jinv, shorter));
    }
    if (change) *change = line_angle(dim, shorter, v);
    return v;
  };

  SplittingEstimate se;
  se.unstable = FoliationField(dim, G);
  se.stable = FoliationField(dim, G);
  se.iters = iters;
  const std::size_t n = se.unstable.npoints();
  double chu = 0, chs = 0;
  for (std::size_t fl = 0; fl < n; ++fl) {
    const Vec x = flat_point(dim, G, fl);
    double cu = 0, cs = 0;
    const Vec u = push_unstable(x, &cu);
    const Vec s = pull_stable(x, &cs);
    chu = std::max(chu, cu);
    chs = std::max(chs, cs);
    for (int c = 0; c < dim; ++c) {
      se.unstable.at(fl)[c] = u[c];
      se.stable.at(fl)[c] = s[c];
    }
  }
  se.last_change_unstable = chu;
  se.last_change_stable = chs;
  if (std::max(chu, chs) > opt.converge_tol)
    throw NoHyperbolicity(
        "splitting: direction iteration did not settle, last change " +
        format_double(std::max(chu, chs)));

  // Equivariance, with a fresh iteration at the image point rather than a
  // nearest-sample lookup, so the residual reflects convergence alone.
  double equ = 0, eqs = 0;
  EvalScratch ws;
  for (std::size_t fl = 0; fl < n; ++fl) {
    const Vec x = flat_point(dim, G, fl);
    const DMat jac = a.jacobian(x);
    const Vec ax = advance(a, x, ws);
    Vec u = zero_vec(), s = zero_vec();
    for (int c = 0; c < dim; ++c) {
      u[c] = se.unstable.at(fl)[c];
      s[c] = se.stable.at(fl)[c];
    }
    const Vec pu = normalize_vec(dim, mat_apply(dim, jac, u));
    const Vec psv = normalize_vec(dim, mat_apply(dim, jac, s));
    equ = std::max(equ, line_angle(dim, pu, push_unstable(ax, nullptr)));
    eqs = std::max(eqs, line_angle(dim, psv, pull_stable(ax, nullptr)));
  }
  se.equivariance_unstable = equ;
  se.equivariance_stable = eqs;

  // fix an orientation so fields can be compared across runs
  auto orient_ref = [&](const CVec& v) {
    Vec re = zero_vec(), im = zero_vec();
    for (int c = 0; c < dim; ++c) {
      re[c] = v[c].real();
      im[c] = v[c].imag();
    }
    return norm2(dim, re) > 1e-6 ? re : im;
  };
  se.unstable.orient_along(orient_ref(sd.unstable_vecs.back()));
  se.stable.orient_along(orient_ref(sd.stable_vecs.front()));

  // Consistency of the dominant direction with the dominant 2-plane from an
  // independent 2-frame iteration (3-d actions with a 2-d expanding block).
  if (dim == 3 && sd.unstable.size() >= 2) {
    double flag = 0;
    const int fg = std::min(G, 8);
    const std::size_t fn = pow_size(fg, dim);
    for (std::size_t fl = 0; fl < fn; ++fl) {
      const Vec x = flat_point(dim, fg, fl);
      std::vector<Vec> orbit(static_cast<std::size_t>(iters) + 1);
      orbit[0] = reduce_vec(dim, x);
      EvalScratch ws2;
      for (int j = 1; j <= iters; ++j)
        orbit[j] = advance(ainv, orbit[j - 1], ws2);
      Vec v1 = seed2, v2 = seed;
      for (int j = iters; j >= 1; --j) {
        const DMat jac = a.jacobian(orbit[j]);
        v1 = mat_apply(dim, jac, v1);
        v2 = mat_apply(dim, jac, v2);
        v1 = normalize_vec(dim, v1);
        double dot = 0;
        for (int c = 0; c < dim; ++c) dot += v2[c] * v1[c];
        for (int c = 0; c < dim; ++c) v2[c] -= dot * v1[c];
        v2 = normalize_vec(dim, v2);
      }
      const Vec dom = push_unstable(x, nullptr);
      double d1 = 0, d2 = 0;
      for (int c = 0; c < dim; ++c) {
        d1 += dom[c] * v1[c];
        d2 += dom[c] * v2[c];
      }
      Vec off = zero_vec();
      for (int c = 0; c < dim; ++c) off[c] = dom[c] - d1 * v1[c] - d2 * v2[c];
      flag = std::max(flag, std::asin(std::min(1.0, norm2(dim, off))));
    }
    se.flag_angle = flag;
  }
  return se;
}

// ---------------------------------------------------------------------------
// Derivative cocycle along a line field
// ---------------------------------------------------------------------------

CocycleLogNorm cocycle_log_norm(const std::vector<FourierMap>& family,
                                const GroupWord& word,
                                const FoliationField& field,
                                const CocycleOptions& opt) {
  if (family.empty()) throw ConfigInvalid("cocycle: family must be nonempty");
  const int dim = family.front().dim();
  for (const auto& f : family)
    if (f.dim() != dim)
      throw DimensionMismatch("cocycle: family dimensions differ");
  if (word.p.size() != family.size())
    throw ConfigInvalid("cocycle: word length must match the family size");
  if (field.dim != dim)
    throw DimensionMismatch("cocycle: line field dimension mismatch");

  // invariance pre-check at random points
  Rng rng(opt.seed);
  double worst_angle = 0;
  EvalScratch ws;
  for (int s = 0; s < opt.invariance_samples; ++s) {
    Vec x = zero_vec();
    for (int a = 0; a < dim; ++a) x[a] = rng.uniform();
    for (const auto& f : family) {
      const Vec v = field.sample_nearest(x);
      const Vec w = normalize_vec(dim, mat_apply(dim, f.jacobian(x), v));
      const Vec tx = advance(f, x, ws);
      worst_angle =
          std::max(worst_angle, line_angle(dim, w, field.sample_nearest(tx)));
    }
  }
  if (worst_angle > opt.angle_tol)
    throw FoliationNotInvariant("cocycle: line field moves by angle " +
                                format_double(worst_angle));

  std::vector<FourierMap> inv(family.size());
  std::vector<char> have_inv(family.size(), 0);
  auto inverse_of = [&](std::size_t j) -> const FourierMap& {
    if (!have_inv[j]) {
      InvertOptions io;
      io.grid = default_grid(dim);
      inv[j] = invert(family[j], io).inv;
      have_inv[j] = 1;
    }
    return inv[j];
  };

  double sup = 0;
  const std::size_t n = field.npoints();
  for (std::size_t fl = 0; fl < n; ++fl) {
    Vec x = flat_point(dim, field.G, fl);
    Vec v = zero_vec();
    for (int a = 0; a < dim; ++a) v[a] = field.at(fl)[a];
    double total = 0;
    for (std::size_t j = 0; j < family.size(); ++j) {
      const std::int64_t reps = word.p[j];
      if (reps == 0) continue;
      const FourierMap& m = reps > 0 ? family[j] : inverse_of(j);
      for (std::int64_t r = 0; r < std::llabs(reps); ++r) {
        if (m.is_affine() && is_identity_linear(m)) {
          // a rigid translation has derivative exactly the identity
          x = advance(m, x, ws);
          continue;
        }
        const Vec w = mat_apply(dim, m.jacobian(x), v);
        const double nn = norm2(dim, w);
        total += std::log(nn);
        for (int a = 0; a < dim; ++a) v[a] = w[a] / nn;
        x = advance(m, x, ws);
      }
    }
    sup = std::max(sup, std::abs(total));
  }
  CocycleLogNorm out;
  out.sup_log = sup;
  out.invariance_residual = worst_angle;
  return out;
}

}  // namespace abctorus
