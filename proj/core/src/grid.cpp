#include "abctorus/grid.hpp"

#include <algorithm>
#include <cmath>
#include <complex>

#include "abctorus/errors.hpp"
#include "abctorus/fft.hpp"

namespace abctorus {

namespace {
constexpr double kTwoPi = 6.283185307179586476925286766559;

std::size_t pow_size(int G, int dim) {
  std::size_t n = 1;
  for (int i = 0; i < dim; ++i) n *= static_cast<std::size_t>(G);
  return n;
}

/// Decomposes a flat row-major index into per-axis grid indices.
inline void unflatten(std::size_t flat, int dim, int G, int* k) {
  for (int a = dim - 1; a >= 0; --a) {
    k[a] = static_cast<int>(flat % G);
    flat /= G;
  }
}

inline std::size_t flatten(int dim, int G, const int* k) {
  std::size_t f = 0;
  for (int a = 0; a < dim; ++a) f = f * G + static_cast<std::size_t>(k[a]);
  return f;
}
}  // namespace

GridFunction::GridFunction(int dim_, int comps_, int G_)
    : dim(dim_), comps(comps_), G(G_), v(pow_size(G_, dim_) * comps_, 0.0) {}

std::size_t GridFunction::npoints() const { return pow_size(G, dim); }

Vec GridFunction::point(std::size_t flat) const {
  int k[kMaxDim] = {0, 0, 0};
  unflatten(flat, dim, G, k);
  Vec x = zero_vec();
  for (int a = 0; a < dim; ++a) x[a] = static_cast<double>(k[a]) / G;
  return x;
}

GridFunction sample_periodic(const FourierMap& f, int G) {
  const int dim = f.dim();
  if (f.max_degree() > G / 2 - 1)
    throw GridTooCoarse("sample_periodic: mode degree " +
                        std::to_string(f.max_degree()) +
                        " needs a grid larger than " + std::to_string(G));
  GridFunction out(dim, dim, G);
  if (f.modes().empty()) return out;

  const std::size_t n = out.npoints();
  std::vector<std::complex<double>> buf(n), res(n);
  for (int comp = 0; comp < dim; ++comp) {
    std::fill(buf.begin(), buf.end(), std::complex<double>(0.0, 0.0));
    for (const Mode& m : f.modes()) {
      int kp[kMaxDim], km[kMaxDim];
      for (int a = 0; a < dim; ++a) {
        kp[a] = fft_bin(m.n[a], G);
        km[a] = fft_bin(-m.n[a], G);
      }
      buf[flatten(dim, G, kp)] += m.c[comp];
      buf[flatten(dim, G, km)] += std::conj(m.c[comp]);
    }
    fft(dim, G, buf.data(), res.data(), /*forward=*/false);
    for (std::size_t i = 0; i < n; ++i) out.v[i * dim + comp] = res[i].real();
  }
  return out;
}

GridProjection project_grid(const GridFunction& g, int out_degree,
                            double prune_tol) {
  const int dim = g.dim;
  const int G = g.G;
  if (g.comps != dim)
    throw DimensionMismatch("project_grid expects one component per axis");
  if (out_degree > G / 2 - 1)
    throw ConfigInvalid("projection degree exceeds grid Nyquist band");

  const std::size_t n = g.npoints();
  std::vector<std::complex<double>> buf(n);
  std::vector<std::vector<std::complex<double>>> hat(dim);
  for (int comp = 0; comp < dim; ++comp) {
    for (std::size_t i = 0; i < n; ++i)
      buf[i] = {g.v[i * dim + comp], 0.0};
    hat[comp].resize(n);
    fft(dim, G, buf.data(), hat[comp].data(), /*forward=*/true);
  }
  const double scale = 1.0 / static_cast<double>(n);

  GridProjection out;
  Vec mean = zero_vec();
  for (int comp = 0; comp < dim; ++comp) mean[comp] = hat[comp][0].real() * scale;

  std::vector<Mode> kept;
  double discarded2 = 0.0, edge2 = 0.0;
  const double prune2 = prune_tol * prune_tol;
  int k[kMaxDim] = {0, 0, 0};
  for (std::size_t flat = 0; flat < n; ++flat) {
    unflatten(flat, dim, G, k);
    IVec freq = zero_ivec();
    bool nyquist = false;
    int lead = 0;
    int ninf = 0;
    for (int a = 0; a < dim; ++a) {
      freq[a] = fft_freq(k[a], G);
      if (k[a] == G / 2) nyquist = true;
      if (lead == 0 && freq[a] != 0) lead = freq[a] > 0 ? 1 : -1;
      ninf = std::max(ninf, std::abs(freq[a]));
    }
    if (nyquist) {
      // No conjugate partner bin on this grid; report, never keep.
      double a2 = 0.0;
      for (int comp = 0; comp < dim; ++comp)
        a2 += std::norm(hat[comp][flat] * scale);
      edge2 += a2;
      continue;
    }
    if (lead <= 0) continue;  // constant bin or mirror representative

    // Average the bin with its mirror for an exactly real reconstruction.
    int km[kMaxDim];
    for (int a = 0; a < dim; ++a) km[a] = fft_bin(-freq[a], G);
    const std::size_t mflat = flatten(dim, G, km);

    Mode m;
    m.n = freq;
    double a2 = 0.0;
    for (int comp = 0; comp < dim; ++comp) {
      const std::complex<double> c =
          0.5 * (hat[comp][flat] + std::conj(hat[comp][mflat])) * scale;
      m.c[comp] = c;
      a2 += std::norm(c);
    }
    if (ninf == G / 2 - 1) edge2 += 2.0 * a2;
    if (ninf > out_degree || a2 <= prune2) {
      discarded2 += 2.0 * a2;
      continue;
    }
    kept.push_back(m);
  }

  out.fn = FourierMap(dim, IMat{}, mean, std::move(kept));
  out.discarded_l2 = std::sqrt(discarded2);
  out.band_edge_mass = std::sqrt(edge2);
  return out;
}

FoliationField::FoliationField(int dim_, int G_)
    : dim(dim_), G(G_), dirs(pow_size(G_, dim_) * dim_, 0.0) {}

std::size_t FoliationField::npoints() const { return pow_size(G, dim); }

Vec FoliationField::sample_nearest(const Vec& x) const {
  int k[kMaxDim] = {0, 0, 0};
  for (int a = 0; a < dim; ++a) {
    long idx = std::lround(mod1(x[a]) * G);
    k[a] = static_cast<int>(idx % G);
  }
  const double* d = at(flatten(dim, G, k));
  Vec out = zero_vec();
  for (int a = 0; a < dim; ++a) out[a] = d[a];
  return out;
}

void FoliationField::orient_along(const Vec& ref) {
  const std::size_t n = npoints();
  for (std::size_t i = 0; i < n; ++i) {
    double* d = at(i);
    double dp = 0.0;
    for (int a = 0; a < dim; ++a) dp += d[a] * ref[a];
    if (dp < 0.0)
      for (int a = 0; a < dim; ++a) d[a] = -d[a];
  }
}

double line_angle(int dim, const Vec& a, const Vec& b) {
  double dp = 0.0, na = 0.0, nb = 0.0;
  for (int i = 0; i < dim; ++i) {
    dp += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  const double denom = std::sqrt(na * nb);
  if (denom == 0.0) return 0.0;
  double c = std::abs(dp) / denom;
  c = std::min(1.0, c);
  return std::acos(c);
}

double FoliationField::max_adjacent_angle() const {
  const std::size_t n = npoints();
  double worst = 0.0;
  int k[kMaxDim];
  for (std::size_t flat = 0; flat < n; ++flat) {
    unflatten(flat, dim, G, k);
    Vec here = zero_vec();
    for (int a = 0; a < dim; ++a) here[a] = at(flat)[a];
    for (int a = 0; a < dim; ++a) {
      int kn[kMaxDim] = {k[0], k[1], k[2]};
      kn[a] = (k[a] + 1) % G;
      const double* d = at(flatten(dim, G, kn));
      Vec there = zero_vec();
      for (int b = 0; b < dim; ++b) there[b] = d[b];
      worst = std::max(worst, line_angle(dim, here, there));
    }
  }
  return worst;
}

namespace {

/// Minimal spectral interpolant for a grid function with arbitrary component
/// count (used by the leafwise norms; torus maps use FourierMap instead).
struct SpectralInterp {
  int dim, comps, G;
  std::vector<IVec> freq;
  std::vector<std::complex<double>> coef;  // mode-major, comps entries each
  IVec maxdeg = zero_ivec();

  explicit SpectralInterp(const GridFunction& g)
      : dim(g.dim), comps(g.comps), G(g.G) {
    const std::size_t n = g.npoints();
    std::vector<std::complex<double>> buf(n), hat(n);
    std::vector<std::vector<std::complex<double>>> all(comps);
    for (int comp = 0; comp < comps; ++comp) {
      for (std::size_t i = 0; i < n; ++i) buf[i] = {g.v[i * comps + comp], 0.0};
      all[comp].resize(n);
      fft(dim, G, buf.data(), all[comp].data(), /*forward=*/true);
    }
    const double scale = 1.0 / static_cast<double>(n);
    int k[kMaxDim];
    for (std::size_t flat = 0; flat < n; ++flat) {
      unflatten(flat, dim, G, k);
      IVec f = zero_ivec();
      bool nyquist = false;
      for (int a = 0; a < dim; ++a) {
        f[a] = fft_freq(k[a], G);
        if (k[a] == G / 2) nyquist = true;
      }
      if (nyquist) continue;
      double a2 = 0.0;
      for (int comp = 0; comp < comps; ++comp)
        a2 += std::norm(all[comp][flat]);
      if (a2 * scale * scale < 1e-30) continue;
      freq.push_back(f);
      for (int comp = 0; comp < comps; ++comp)
        coef.push_back(all[comp][flat] * scale);
      for (int a = 0; a < dim; ++a)
        maxdeg[a] = std::max(maxdeg[a], std::abs(f[a]));
    }
  }

  void eval(const Vec& x, double* out) const {
    std::vector<std::complex<double>> pw[kMaxDim];
    for (int a = 0; a < dim; ++a) {
      pw[a].resize(maxdeg[a] + 1);
      const double ang = kTwoPi * mod1(x[a]);
      const std::complex<double> w(std::cos(ang), std::sin(ang));
      pw[a][0] = {1.0, 0.0};
      for (int t = 1; t <= maxdeg[a]; ++t) pw[a][t] = pw[a][t - 1] * w;
    }
    std::vector<std::complex<double>> acc(comps, {0.0, 0.0});
    for (std::size_t m = 0; m < freq.size(); ++m) {
      std::complex<double> ph(1.0, 0.0);
      for (int a = 0; a < dim; ++a) {
        const int na = freq[m][a];
        ph *= na >= 0 ? pw[a][na] : std::conj(pw[a][-na]);
      }
      for (int comp = 0; comp < comps; ++comp)
        acc[comp] += coef[m * comps + comp] * ph;
    }
    for (int comp = 0; comp < comps; ++comp) out[comp] = acc[comp].real();
  }
};

}  // namespace

double norm_ck_foliation(const GridFunction& phi, const FoliationField& v,
                         int k, double delta) {
  if (phi.dim != v.dim || phi.G != v.G)
    throw DimensionMismatch("foliation norm: grid and field disagree");
  if (k < 0 || k > 6) throw ConfigInvalid("leafwise norm order must be 0..6");
  if (delta <= 0.0) delta = 0.5 / phi.G;

  SpectralInterp interp(phi);
  const std::size_t n = phi.npoints();
  std::vector<double> sup(k + 1, 0.0);
  std::vector<double> val(phi.comps);

  // Binomial weights for the i-fold centered difference.
  std::vector<std::vector<double>> binom(k + 1);
  for (int i = 0; i <= k; ++i) {
    binom[i].resize(i + 1);
    binom[i][0] = 1.0;
    for (int j = 1; j <= i; ++j)
      binom[i][j] = binom[i][j - 1] * (i - j + 1) / j;
  }

  for (std::size_t flat = 0; flat < n; ++flat) {
    const Vec x = phi.point(flat);
    Vec dir = zero_vec();
    for (int a = 0; a < phi.dim; ++a) dir[a] = v.at(flat)[a];
    for (int i = 0; i <= k; ++i) {
      // D_v^i phi(x) ~ (2 delta)^{-i} sum_j (-1)^j C(i,j) phi(x + (i-2j) delta v)
      std::vector<double> acc(phi.comps, 0.0);
      for (int j = 0; j <= i; ++j) {
        Vec xx = x;
        const double t = (i - 2.0 * j) * delta;
        for (int a = 0; a < phi.dim; ++a) xx[a] += t * dir[a];
        interp.eval(xx, val.data());
        const double w = (j % 2 == 0 ? 1.0 : -1.0) * binom[i][j];
        for (int comp = 0; comp < phi.comps; ++comp) acc[comp] += w * val[comp];
      }
      double s = 0.0;
      const double h = std::pow(2.0 * delta, i);
      for (int comp = 0; comp < phi.comps; ++comp) {
        const double d = acc[comp] / h;
        s += d * d;
      }
      sup[i] = std::max(sup[i], std::sqrt(s));
    }
  }
  double total = 0.0;
  for (int i = 0; i <= k; ++i) total += sup[i];
  return total;
}

}  // namespace abctorus
