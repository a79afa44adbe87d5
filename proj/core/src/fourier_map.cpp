#include "abctorus/fourier_map.hpp"

#include <algorithm>
#include <cmath>

#include "abctorus/errors.hpp"

namespace abctorus {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

inline bool lex_less(const IVec& a, const IVec& b) {
  for (int i = 0; i < kMaxDim; ++i) {
    if (a[i] != b[i]) return a[i] < b[i];
  }
  return false;
}

inline double amp2(int dim, const CVec& c) {
  double s = 0.0;
  for (int i = 0; i < dim; ++i) s += std::norm(c[i]);
  return s;
}

}  // namespace

FourierMap::FourierMap(int dim, const IMat& linear, const Vec& constant,
                       std::vector<Mode> raw_modes)
    : dim_(dim), lin_(linear), c0_(constant) {
  if (dim < 1 || dim > kMaxDim)
    throw DimensionMismatch("map dimension must be 1..3, got " +
                            std::to_string(dim));
  for (int i = dim; i < kMaxDim; ++i) c0_[i] = 0.0;
  canonicalize(std::move(raw_modes));
}

FourierMap FourierMap::identity(int dim) {
  return FourierMap(dim, identity_imat(), zero_vec());
}

FourierMap FourierMap::translation(int dim, const Vec& c) {
  return FourierMap(dim, identity_imat(), c);
}

FourierMap FourierMap::affine(int dim, const IMat& linear, const Vec& c) {
  return FourierMap(dim, linear, c);
}

void FourierMap::canonicalize(std::vector<Mode> raw) {
  modes_.clear();
  modes_.reserve(raw.size());
  for (Mode& m : raw) {
    for (int a = dim_; a < kMaxDim; ++a) {
      if (m.n[a] != 0)
        throw DimensionMismatch("mode frequency outside map dimension");
      m.c[a] = 0.0;
    }
    int lead = 0;
    for (int a = 0; a < dim_; ++a) {
      if (m.n[a] != 0) {
        lead = m.n[a] > 0 ? 1 : -1;
        break;
      }
    }
    if (lead == 0) {
      // Zero frequency belongs to the constant term.
      for (int i = 0; i < dim_; ++i) {
        if (std::abs(m.c[i].imag()) > 1e-9)
          throw ConfigInvalid("zero-frequency coefficient must be real");
        c0_[i] += m.c[i].real();
      }
      continue;
    }
    if (lead < 0) {
      for (int a = 0; a < dim_; ++a) m.n[a] = -m.n[a];
      for (int i = 0; i < dim_; ++i) m.c[i] = std::conj(m.c[i]);
    }
    modes_.push_back(m);
  }
  std::sort(modes_.begin(), modes_.end(),
            [](const Mode& a, const Mode& b) { return lex_less(a.n, b.n); });
  // Sum repeats: each raw entry is one real pair-term, so several entries at
  // the same canonical frequency add up. (Readers of serialized maps that
  // store both halves of a pair fold the redundant half before constructing.)
  std::size_t w = 0;
  for (std::size_t r = 0; r < modes_.size(); ++r) {
    if (w > 0 && modes_[r].n == modes_[w - 1].n) {
      for (int i = 0; i < dim_; ++i) modes_[w - 1].c[i] += modes_[r].c[i];
      continue;
    }
    modes_[w++] = modes_[r];
  }
  modes_.resize(w);
  modes_.erase(std::remove_if(modes_.begin(), modes_.end(),
                              [this](const Mode& m) {
                                return amp2(dim_, m.c) == 0.0;
                              }),
               modes_.end());
  refresh_degree_cache();
}

void FourierMap::refresh_degree_cache() {
  maxdeg_ = zero_ivec();
  for (const Mode& m : modes_)
    for (int a = 0; a < dim_; ++a)
      maxdeg_[a] = std::max(maxdeg_[a], std::abs(m.n[a]));
  max_degree_ = 0;
  for (int a = 0; a < dim_; ++a) max_degree_ = std::max(max_degree_, maxdeg_[a]);
}

double FourierMap::prune(double abs_tol) {
  if (abs_tol <= 0.0 || modes_.empty()) return 0.0;
  const double t2 = abs_tol * abs_tol;
  double dropped = 0.0;
  std::size_t w = 0;
  for (std::size_t r = 0; r < modes_.size(); ++r) {
    const double a2 = amp2(dim_, modes_[r].c);
    if (a2 <= t2) {
      dropped += 2.0 * a2;  // both members of the conjugate pair
      continue;
    }
    modes_[w++] = modes_[r];
  }
  modes_.resize(w);
  refresh_degree_cache();
  return std::sqrt(dropped);
}

bool FourierMap::well_formed() const {
  for (std::size_t r = 0; r < modes_.size(); ++r) {
    int lead = 0;
    for (int a = 0; a < dim_; ++a) {
      if (modes_[r].n[a] != 0) {
        lead = modes_[r].n[a] > 0 ? 1 : -1;
        break;
      }
    }
    if (lead <= 0) return false;
    if (r > 0 && !lex_less(modes_[r - 1].n, modes_[r].n)) return false;
  }
  return true;
}

namespace {

inline void build_tables(const FourierMap& f, const double* y,
                         EvalScratch& ws) {
  for (int a = 0; a < f.dim(); ++a) {
    const int deg = f.max_degree_axis(a);
    auto& tab = ws.pow[a];
    if (static_cast<int>(tab.size()) < deg + 1) tab.resize(deg + 1);
    const double fy = y[a] - std::floor(y[a]);
    const double ang = kTwoPi * fy;
    const std::complex<double> w(std::cos(ang), std::sin(ang));
    tab[0] = {1.0, 0.0};
    for (int t = 1; t <= deg; ++t) tab[t] = tab[t - 1] * w;
  }
}

inline std::complex<double> mode_phase(const Mode& m, int dim,
                                       const EvalScratch& ws) {
  // Canonical form guarantees n[0] >= 0.
  std::complex<double> ph = ws.pow[0][m.n[0]];
  for (int a = 1; a < dim; ++a) {
    const int na = m.n[a];
    if (na >= 0)
      ph *= ws.pow[a][na];
    else
      ph *= std::conj(ws.pow[a][-na]);
  }
  return ph;
}

}  // namespace

void eval_periodic(const FourierMap& f, const double* y, double* out,
                   EvalScratch& ws) {
  const int dim = f.dim();
  const auto& modes = f.modes();
  if (modes.empty()) {
    for (int i = 0; i < dim; ++i) out[i] = 0.0;
    return;
  }
  build_tables(f, y, ws);
  std::complex<double> acc[kMaxDim] = {};
  if (dim == 2) {
    const std::complex<double>* t0 = ws.pow[0].data();
    const std::complex<double>* t1 = ws.pow[1].data();
    for (const Mode& m : modes) {
      const int n1 = m.n[1];
      const std::complex<double> ph =
          n1 >= 0 ? t0[m.n[0]] * t1[n1] : t0[m.n[0]] * std::conj(t1[-n1]);
      acc[0] += m.c[0] * ph;
      acc[1] += m.c[1] * ph;
    }
  } else {
    for (const Mode& m : modes) {
      const std::complex<double> ph = mode_phase(m, dim, ws);
      for (int i = 0; i < dim; ++i) acc[i] += m.c[i] * ph;
    }
  }
  for (int i = 0; i < dim; ++i) out[i] = 2.0 * acc[i].real();
}

void eval_periodic_jac(const FourierMap& f, const double* y, double* val,
                       double* jac, EvalScratch& ws) {
  const int dim = f.dim();
  const auto& modes = f.modes();
  for (int i = 0; i < dim; ++i) val[i] = 0.0;
  for (int i = 0; i < dim * dim; ++i) jac[i] = 0.0;
  if (modes.empty()) return;
  build_tables(f, y, ws);
  for (const Mode& m : modes) {
    const std::complex<double> ph = mode_phase(m, dim, ws);
    for (int i = 0; i < dim; ++i) {
      const std::complex<double> z = m.c[i] * ph;
      val[i] += 2.0 * z.real();
      // d/dy_j of 2 Re(c e^{2 pi i <n,y>}) = -4 pi n_j Im(c e^{...})
      const double im = -2.0 * kTwoPi * z.imag();
      for (int j = 0; j < dim; ++j) jac[i * dim + j] += im * m.n[j];
    }
  }
}

void FourierMap::periodic_batch(const double* pts, std::size_t npts,
                                double* out) const {
  if (modes_.empty()) {
    std::fill(out, out + npts * static_cast<std::size_t>(dim_), 0.0);
    return;
  }
  const int dim = dim_;
  parallel_chunks(
      npts,
      [&](std::size_t lo, std::size_t hi) {
        EvalScratch ws;
        for (std::size_t i = lo; i < hi; ++i)
          eval_periodic(*this, pts + i * dim, out + i * dim, ws);
      },
      512);
}

Vec FourierMap::evaluate(const Vec& x, bool lifted) const {
  Vec y = mat_apply(dim_, lin_, x);
  EvalScratch ws;
  double p[kMaxDim] = {0, 0, 0};
  if (!modes_.empty()) eval_periodic(*this, x.data(), p, ws);
  for (int i = 0; i < dim_; ++i) {
    y[i] += c0_[i] + p[i];
    if (!lifted) y[i] = mod1(y[i]);
  }
  return y;
}

Vec FourierMap::periodic(const Vec& x) const {
  Vec out = zero_vec();
  if (modes_.empty()) return out;
  EvalScratch ws;
  eval_periodic(*this, x.data(), out.data(), ws);
  return out;
}

DMat FourierMap::jacobian(const Vec& x) const {
  DMat j{};
  for (int i = 0; i < dim_; ++i)
    for (int k = 0; k < dim_; ++k) j[i][k] = static_cast<double>(lin_[i][k]);
  if (modes_.empty()) return j;
  EvalScratch ws;
  double val[kMaxDim];
  double pj[kMaxDim * kMaxDim];
  eval_periodic_jac(*this, x.data(), val, pj, ws);
  for (int i = 0; i < dim_; ++i)
    for (int k = 0; k < dim_; ++k) j[i][k] += pj[i * dim_ + k];
  return j;
}

double FourierMap::mode_c0_bound() const {
  double s = 0.0;
  for (const Mode& m : modes_) s += 2.0 * std::sqrt(amp2(dim_, m.c));
  return s;
}

double FourierMap::mode_c1_bound() const {
  double s = 0.0;
  for (const Mode& m : modes_) {
    double n2 = 0.0;
    for (int a = 0; a < dim_; ++a) n2 += double(m.n[a]) * double(m.n[a]);
    s += 2.0 * std::sqrt(amp2(dim_, m.c)) * (1.0 + kTwoPi * std::sqrt(n2));
  }
  return s;
}

std::vector<Vec> lift_track(const FourierMap& f, const Vec& x0, int steps) {
  std::vector<Vec> orbit;
  orbit.reserve(static_cast<std::size_t>(steps) + 1);
  Vec x = x0;
  for (int i = f.dim(); i < kMaxDim; ++i) x[i] = 0.0;
  orbit.push_back(x);
  EvalScratch ws;
  double p[kMaxDim];
  for (int s = 0; s < steps; ++s) {
    Vec y = mat_apply(f.dim(), f.linear(), x);
    if (!f.modes().empty()) {
      eval_periodic(f, x.data(), p, ws);
      for (int i = 0; i < f.dim(); ++i) y[i] += p[i];
    }
    for (int i = 0; i < f.dim(); ++i) y[i] += f.constant()[i];
    x = y;
    orbit.push_back(x);
  }
  return orbit;
}

}  // namespace abctorus
