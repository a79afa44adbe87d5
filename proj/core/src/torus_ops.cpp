#include "abctorus/torus_ops.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>

#include "abctorus/errors.hpp"
#include "abctorus/fft.hpp"

namespace abctorus {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;

/// Solves the dim x dim system J d = r in place (tiny Gaussian elimination
/// with partial pivoting; dim <= 3).
bool solve_small(int dim, double* J, double* r, double* d) {
  int piv[kMaxDim] = {0, 1, 2};
  for (int c = 0; c < dim; ++c) {
    int best = c;
    for (int rr = c + 1; rr < dim; ++rr)
      if (std::abs(J[piv[rr] * dim + c]) > std::abs(J[piv[best] * dim + c]))
        best = rr;
    std::swap(piv[c], piv[best]);
    const double p = J[piv[c] * dim + c];
    if (std::abs(p) < 1e-14) return false;
    for (int rr = c + 1; rr < dim; ++rr) {
      const double f = J[piv[rr] * dim + c] / p;
      for (int cc = c; cc < dim; ++cc)
        J[piv[rr] * dim + cc] -= f * J[piv[c] * dim + cc];
      r[piv[rr]] -= f * r[piv[c]];
    }
  }
  for (int c = dim - 1; c >= 0; --c) {
    double s = r[piv[c]];
    for (int cc = c + 1; cc < dim; ++cc) s -= J[piv[c] * dim + cc] * d[cc];
    d[c] = s / J[piv[c] * dim + c];
  }
  return true;
}

/// Composition when the right factor is affine: frequencies map exactly
/// (n -> L^T n) and pick up a constant phase, so no grid is needed.
FourierMap compose_right_affine(const FourierMap& f, const FourierMap& g) {
  const int dim = f.dim();
  std::vector<Mode> out;
  out.reserve(f.mode_count());
  for (const Mode& m : f.modes()) {
    Mode nm;
    double phase = 0.0;
    for (int a = 0; a < dim; ++a) {
      std::int64_t s = 0;
      for (int b = 0; b < dim; ++b) s += g.linear()[b][a] * m.n[b];
      if (std::llabs(s) > (1 << 30))
        throw GridTooCoarse("composed frequency overflows the representable band");
      nm.n[a] = static_cast<int>(s);
      phase += static_cast<double>(m.n[a]) * g.constant()[a];
    }
    const std::complex<double> ph(std::cos(kTwoPi * phase),
                                  std::sin(kTwoPi * phase));
    for (int i = 0; i < dim; ++i) nm.c[i] = m.c[i] * ph;
    out.push_back(nm);
  }
  Vec c = mat_apply(dim, f.linear(), g.constant());
  for (int i = 0; i < dim; ++i) c[i] += f.constant()[i];
  return FourierMap(dim, mat_mul(dim, f.linear(), g.linear()), c,
                    std::move(out));
}

/// Composition when the left factor is affine: f(g(x)) = L g(x) + c.
FourierMap compose_left_affine(const FourierMap& f, const FourierMap& g) {
  const int dim = f.dim();
  std::vector<Mode> out;
  out.reserve(g.mode_count());
  for (const Mode& m : g.modes()) {
    Mode nm;
    nm.n = m.n;
    for (int i = 0; i < dim; ++i) {
      std::complex<double> s(0.0, 0.0);
      for (int j = 0; j < dim; ++j)
        s += static_cast<double>(f.linear()[i][j]) * m.c[j];
      nm.c[i] = s;
    }
    out.push_back(nm);
  }
  Vec c = mat_apply(dim, f.linear(), g.constant());
  for (int i = 0; i < dim; ++i) c[i] += f.constant()[i];
  return FourierMap(dim, mat_mul(dim, f.linear(), g.linear()), c,
                    std::move(out));
}

}  // namespace

int default_grid(int dim) {
  switch (dim) {
    case 1:
      return 1024;
    case 2:
      return 256;
    default:
      return 64;
  }
}

ComposeResult compose(const FourierMap& f, const FourierMap& g,
                      const ComposeOptions& opt) {
  if (f.dim() != g.dim())
    throw DimensionMismatch("compose: maps live on different tori");
  const int dim = f.dim();

  ComposeResult res;
  if (g.is_affine()) {
    res.map = compose_right_affine(f, g);
    res.map.prune(opt.prune_tol);
    return res;
  }
  if (f.is_affine()) {
    res.map = compose_left_affine(f, g);
    res.map.prune(opt.prune_tol);
    return res;
  }

  const int G = opt.grid > 0 ? opt.grid : default_grid(dim);
  const int out_degree = opt.out_degree >= 0 ? opt.out_degree : G / 2 - 1;
  if (out_degree > G / 2 - 1)
    throw ConfigInvalid("compose: requested degree exceeds the grid band");

  // Frequencies of f get multiplied by g's linear part; if even the linear
  // image of the stored band falls outside the grid, sampling would fold it
  // somewhere unrelated, so refuse rather than alias silently.
  {
    int worst = 0;
    for (const Mode& m : f.modes()) {
      for (int a = 0; a < dim; ++a) {
        std::int64_t s = 0;
        for (int b = 0; b < dim; ++b) s += g.linear()[b][a] * m.n[b];
        worst = std::max<int>(worst, static_cast<int>(std::llabs(s)));
      }
    }
    if (worst > G / 2 - 1)
      throw GridTooCoarse(
          "compose: left factor's band maps to degree " + std::to_string(worst) +
          ", beyond this grid");
  }

  const GridFunction pg = sample_periodic(g, G);
  const std::size_t n = pg.npoints();

  // Image points y = g(x) on the grid (lifted).
  std::vector<double> pts(n * dim);
  for (std::size_t i = 0; i < n; ++i) {
    const Vec x = pg.point(i);
    Vec y = mat_apply(dim, g.linear(), x);
    for (int a = 0; a < dim; ++a)
      pts[i * dim + a] = y[a] + g.constant()[a] + pg.v[i * dim + a];
  }

  // w = P_f(g(x)) + L_f P_g(x), a periodic function of x.
  GridFunction w(dim, dim, G);
  f.periodic_batch(pts.data(), n, w.v.data());
  for (std::size_t i = 0; i < n; ++i) {
    Vec lp = zero_vec();
    for (int a = 0; a < dim; ++a) lp[a] = pg.v[i * dim + a];
    const Vec ml = mat_apply(dim, f.linear(), lp);
    for (int a = 0; a < dim; ++a) w.v[i * dim + a] += ml[a];
  }

  GridProjection proj = project_grid(w, out_degree, opt.prune_tol);
  if (proj.band_edge_mass > opt.alias_tol)
    throw GridTooCoarse("compose: band-edge mass " +
                        format_double(proj.band_edge_mass) +
                        " exceeds alias tolerance at G=" + std::to_string(G));

  Vec c = mat_apply(dim, f.linear(), g.constant());
  for (int i = 0; i < dim; ++i)
    c[i] += f.constant()[i] + proj.fn.constant()[i];

  res.map = FourierMap(dim, mat_mul(dim, f.linear(), g.linear()), c,
                       std::vector<Mode>(proj.fn.modes()));
  res.discarded_l2 = proj.discarded_l2;
  res.band_edge_mass = proj.band_edge_mass;
  return res;
}

InvertResult invert(const FourierMap& f, const InvertOptions& opt) {
  const int dim = f.dim();
  const int G = opt.grid > 0 ? opt.grid : default_grid(dim);
  const IMat minv = imat_unimodular_inverse(dim, f.linear());

  if (f.is_affine()) {
    // Exact: f^{-1}(x) = M^{-1} x - M^{-1} c.
    Vec c = mat_apply(dim, minv, f.constant());
    for (int i = 0; i < dim; ++i) c[i] = -c[i];
    return {FourierMap::affine(dim, minv, c), 0.0};
  }

  const std::size_t n = [&] {
    std::size_t m = 1;
    for (int i = 0; i < dim; ++i) m *= static_cast<std::size_t>(G);
    return m;
  }();

  GridFunction w(dim, dim, G);
  std::vector<double> sol(n * dim);
  std::atomic<std::size_t> failures{0};

  parallel_chunks(
      n,
      [&](std::size_t lo, std::size_t hi) {
        EvalScratch ws;
        double val[kMaxDim], jac[kMaxDim * kMaxDim];
        double Jl[kMaxDim * kMaxDim], r[kMaxDim], d[kMaxDim];
        for (std::size_t i = lo; i < hi; ++i) {
          // Solve f(y) = t by Newton, starting at the affine inverse.
          Vec t = w.point(i);
          Vec y = mat_apply(dim, minv, t);
          {
            const Vec mc = mat_apply(dim, minv, f.constant());
            for (int a = 0; a < dim; ++a) y[a] -= mc[a];
          }
          bool done = false;
          for (int it = 0; it < opt.max_newton; ++it) {
            eval_periodic_jac(f, y.data(), val, jac, ws);
            double rmax = 0.0;
            Vec fy = mat_apply(dim, f.linear(), y);
            for (int a = 0; a < dim; ++a) {
              r[a] = fy[a] + f.constant()[a] + val[a] - t[a];
              rmax = std::max(rmax, std::abs(r[a]));
            }
            if (rmax < opt.newton_tol) {
              done = true;
              break;
            }
            for (int a = 0; a < dim; ++a)
              for (int b = 0; b < dim; ++b)
                Jl[a * dim + b] =
                    static_cast<double>(f.linear()[a][b]) + jac[a * dim + b];
            if (!solve_small(dim, Jl, r, d)) break;
            for (int a = 0; a < dim; ++a) y[a] -= d[a];
          }
          if (!done) {
            failures.fetch_add(1);
            continue;
          }
          for (int a = 0; a < dim; ++a) sol[i * dim + a] = y[a];
        }
      },
      256);

  if (failures.load() > 0)
    throw NotInvertible("Newton failed at " + std::to_string(failures.load()) +
                        " of " + std::to_string(n) + " grid points");

  // Periodic remainder of the inverse: w(x) = y(x) - M^{-1} x.
  for (std::size_t i = 0; i < n; ++i) {
    const Vec t = w.point(i);
    const Vec mt = mat_apply(dim, minv, t);
    for (int a = 0; a < dim; ++a) w.v[i * dim + a] = sol[i * dim + a] - mt[a];
  }
  GridProjection proj = project_grid(w, G / 2 - 1, opt.prune_tol);

  InvertResult out;
  out.inv = FourierMap(dim, minv, proj.fn.constant(),
                       std::vector<Mode>(proj.fn.modes()));

  // Honest residual check with the projected inverse, both orders, grid sup.
  // Batched: sample one factor exactly on the grid, evaluate the other at the
  // image points.
  double r1 = 0.0, r2 = 0.0;
  {
    const GridFunction pinv = sample_periodic(out.inv, G);
    std::vector<double> img(n * dim), per(n * dim);
    // r1: f(inv(x)) - x.
    for (std::size_t i = 0; i < n; ++i) {
      const Vec x = pinv.point(i);
      const Vec mx = mat_apply(dim, minv, x);
      for (int a = 0; a < dim; ++a)
        img[i * dim + a] =
            mx[a] + out.inv.constant()[a] + pinv.v[i * dim + a];
    }
    f.periodic_batch(img.data(), n, per.data());
    for (std::size_t i = 0; i < n; ++i) {
      const Vec x = pinv.point(i);
      Vec u = zero_vec();
      for (int a = 0; a < dim; ++a) u[a] = img[i * dim + a];
      const Vec fu = mat_apply(dim, f.linear(), u);
      for (int a = 0; a < dim; ++a) {
        const double va = fu[a] + f.constant()[a] + per[i * dim + a];
        r1 = std::max(r1, std::abs(va - x[a]));
      }
    }
    // r2: inv(f(x)) - x.
    const GridFunction pf = sample_periodic(f, G);
    for (std::size_t i = 0; i < n; ++i) {
      const Vec x = pf.point(i);
      const Vec fx = mat_apply(dim, f.linear(), x);
      for (int a = 0; a < dim; ++a)
        img[i * dim + a] = fx[a] + f.constant()[a] + pf.v[i * dim + a];
    }
    out.inv.periodic_batch(img.data(), n, per.data());
    for (std::size_t i = 0; i < n; ++i) {
      const Vec x = pf.point(i);
      Vec u = zero_vec();
      for (int a = 0; a < dim; ++a) u[a] = img[i * dim + a];
      const Vec gu = mat_apply(dim, minv, u);
      for (int a = 0; a < dim; ++a) {
        const double va = gu[a] + out.inv.constant()[a] + per[i * dim + a];
        r2 = std::max(r2, std::abs(va - x[a]));
      }
    }
  }
  out.residual = std::max(r1, r2);
  if (out.residual > opt.tol)
    throw NotInvertible("composition residual " + format_double(out.residual) +
                        " exceeds tolerance " + format_double(opt.tol));
  return out;
}

namespace {

/// Spectral norm of a small matrix (dim <= 3).
double spectral_norm(int dim, const double* m) {
  if (dim == 1) return std::abs(m[0]);
  if (dim == 2) {
    // Largest singular value of [[a,b],[c,d]] in closed form.
    const double a = m[0], b = m[1], c = m[2], d = m[3];
    const double q = a * a + b * b + c * c + d * d;
    const double det = a * d - b * c;
    const double s = std::sqrt(std::max(0.0, q * q - 4.0 * det * det));
    return std::sqrt(std::max(0.0, 0.5 * (q + s)));
  }
  // dim == 3: power iteration on M^T M (fixed 40 steps is plenty here).
  double v[3] = {1.0, 0.7, 0.4};
  double mv[3], mtmv[3];
  for (int it = 0; it < 40; ++it) {
    for (int i = 0; i < 3; ++i)
      mv[i] = m[i * 3 + 0] * v[0] + m[i * 3 + 1] * v[1] + m[i * 3 + 2] * v[2];
    for (int i = 0; i < 3; ++i)
      mtmv[i] = m[0 * 3 + i] * mv[0] + m[1 * 3 + i] * mv[1] + m[2 * 3 + i] * mv[2];
    double nn = std::sqrt(mtmv[0] * mtmv[0] + mtmv[1] * mtmv[1] +
                          mtmv[2] * mtmv[2]);
    if (nn == 0.0) return 0.0;
    for (int i = 0; i < 3; ++i) v[i] = mtmv[i] / nn;
  }
  for (int i = 0; i < 3; ++i)
    mv[i] = m[i * 3 + 0] * v[0] + m[i * 3 + 1] * v[1] + m[i * 3 + 2] * v[2];
  return std::sqrt(mv[0] * mv[0] + mv[1] * mv[1] + mv[2] * mv[2]);
}

}  // namespace

double norm_ck(const FourierMap& f, int k, int G) {
  if (k < 0 || k > 6) throw ConfigInvalid("norm order must be 0..6");
  const int dim = f.dim();
  if (G <= 0) G = default_grid(dim);
  if (f.modes().empty()) return 0.0;
  if (f.max_degree() > G / 2 - 1)
    throw GridTooCoarse("norm grid does not resolve the stored band");

  double total = 0.0;
  const std::size_t n = [&] {
    std::size_t m = 1;
    for (int i = 0; i < dim; ++i) m *= static_cast<std::size_t>(G);
    return m;
  }();

  // Multi-indices of order i over `dim` axes, with multinomial multiplicity.
  for (int order = 0; order <= k; ++order) {
    std::vector<IVec> alphas;
    std::vector<double> mult;
    {
      IVec a = zero_ivec();
      // Enumerate all (a_0,..,a_{dim-1}) >= 0 summing to `order`.
      std::function<void(int, int)> rec = [&](int axis, int left) {
        if (axis == dim - 1) {
          a[axis] = left;
          alphas.push_back(a);
          double m = 1.0;
          int seen = 0;
          for (int t = 0; t < dim; ++t)
            for (int j = 1; j <= a[t]; ++j) {
              ++seen;
              m *= static_cast<double>(seen) / j;
            }
          mult.push_back(m);
          return;
        }
        for (int v = 0; v <= left; ++v) {
          a[axis] = v;
          rec(axis + 1, left - v);
        }
      };
      rec(0, order);
    }

    // Per-point accumulation of the derivative tensor entries.
    std::vector<double> frob2;
    std::vector<double> dergrids;  // order==1: dim*dim grids for spectral norm
    if (order == 1)
      dergrids.assign(n * dim * dim, 0.0);
    else
      frob2.assign(n, 0.0);

    std::vector<std::complex<double>> buf(n), res(n);
    const std::complex<double> tp =
        std::pow(std::complex<double>(0.0, kTwoPi), order);
    for (int comp = 0; comp < dim; ++comp) {
      for (std::size_t ai = 0; ai < alphas.size(); ++ai) {
        const IVec& al = alphas[ai];
        std::fill(buf.begin(), buf.end(), std::complex<double>(0.0, 0.0));
        // Coefficient of D^alpha for mode n: c * (2 pi i)^order * n^alpha.
        for (const Mode& m : f.modes()) {
          std::complex<double> w = m.c[comp];
          double nf = 1.0;
          for (int axx = 0; axx < dim; ++axx)
            for (int j = 0; j < al[axx]; ++j) nf *= m.n[axx];
          w *= nf;
          w *= tp;
          int kp[kMaxDim], km[kMaxDim];
          for (int axx = 0; axx < dim; ++axx) {
            kp[axx] = fft_bin(m.n[axx], G);
            km[axx] = fft_bin(-m.n[axx], G);
          }
          std::size_t fp = 0, fm = 0;
          for (int axx = 0; axx < dim; ++axx) {
            fp = fp * G + kp[axx];
            fm = fm * G + km[axx];
          }
          buf[fp] += w;
          buf[fm] += std::conj(w);
        }
        fft(dim, G, buf.data(), res.data(), /*forward=*/false);
        if (order == 0) {
          for (std::size_t i = 0; i < n; ++i) {
            const double t = res[i].real();
            frob2[i] += t * t;
          }
        } else if (order == 1) {
          // al has a single 1 in some axis j.
          int j = 0;
          for (int axx = 0; axx < dim; ++axx)
            if (al[axx] == 1) j = axx;
          for (std::size_t i = 0; i < n; ++i)
            dergrids[(i * dim + comp) * dim + j] = res[i].real();
        } else {
          const double mu = mult[ai];
          for (std::size_t i = 0; i < n; ++i) {
            const double t = res[i].real();
            frob2[i] += mu * t * t;
          }
        }
      }
    }

    double sup = 0.0;
    if (order == 1) {
      for (std::size_t i = 0; i < n; ++i)
        sup = std::max(sup, spectral_norm(dim, &dergrids[i * dim * dim]));
    } else {
      for (std::size_t i = 0; i < n; ++i)
        sup = std::max(sup, std::sqrt(frob2[i]));
    }
    total += sup;
  }
  return total;
}

double norm_c0(const FourierMap& f, int G) { return norm_ck(f, 0, G); }

}  // namespace abctorus
