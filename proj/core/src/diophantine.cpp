#include "abctorus/diophantine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "abctorus/errors.hpp"

namespace abctorus {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// Number of integer vectors p in Z^K with |p|_1 <= L, as a double:
/// sum_j 2^j C(K,j) C(L,j).
double l1_ball_count(int K, std::int64_t L) {
  double total = 1.0;  // j = 0 term
  double term = 1.0;
  for (int j = 1; j <= K && j <= L; ++j) {
    term *= 2.0 * static_cast<double>(K - j + 1) *
            static_cast<double>(L - j + 1) /
            (static_cast<double>(j) * static_cast<double>(j));
    total += term;
  }
  return total;
}

/// Visits every p in Z^K with |p|_1 <= L. The sink receives the coefficient
/// vector and the (lifted, not reduced) value sum p_i cols[i].
template <class Sink>
void for_each_l1_word(const std::vector<Vec>& cols, int dim, int L,
                      Sink&& sink) {
  const int K = static_cast<int>(cols.size());
  std::vector<std::int64_t> p(K, 0);
  // Recursive enumeration with an incremental value on the last axis.
  auto rec = [&](auto&& self, int axis, int rem, const Vec& val) -> void {
    if (axis == K - 1) {
      Vec t = val;
      const Vec& c = cols[axis];
      for (int a = 0; a < dim; ++a)
        t[a] += static_cast<double>(-rem) * c[a];
      for (int v = -rem; v <= rem; ++v) {
        p[axis] = v;
        sink(p, t);
        for (int a = 0; a < dim; ++a) t[a] += c[a];
      }
      p[axis] = 0;
      return;
    }
    for (int v = -rem; v <= rem; ++v) {
      Vec t = val;
      for (int a = 0; a < dim; ++a)
        t[a] += static_cast<double>(v) * cols[axis][a];
      p[axis] = v;
      self(self, axis + 1, rem - std::abs(v), t);
    }
    p[axis] = 0;
  };
  if (K == 0) return;
  rec(rec, 0, L, zero_vec());
}

}  // namespace

SdcResult sdc_check(const std::vector<Vec>& vectors, int dim, double tau,
                    int n_max, double floor_tol, double decay_ratio) {
  if (dim < 1 || dim > kMaxDim)
    throw DimensionMismatch("torus dimension must be 1..3");
  if (n_max < 1) throw ConfigInvalid("scan radius must be positive");
  if (tau <= 0.0) throw ConfigInvalid("Diophantine exponent must be positive");
  const int m = static_cast<int>(vectors.size());
  if (m < 1) throw ConfigInvalid("need at least one vector");
  if (m > 16) throw ConfigInvalid("at most 16 vectors supported");

  std::vector<double> pw(n_max + 1, 0.0);
  for (int s = 1; s <= n_max; ++s)
    pw[s] = std::pow(static_cast<double>(s), tau);

  SdcResult out;
  out.tau = tau;
  out.n_max = n_max;
  out.curve.assign(n_max + 1, kInf);
  double best = kInf;
  IVec best_n = zero_ivec();

  // Canonical half: first nonzero component positive (the divisor is even
  // under n -> -n).
  IVec n = zero_ivec();
  double dots[16];
  auto rec = [&](auto&& self, int axis, bool lead_zero, int prefix_max) -> void {
    if (axis == dim - 1) {
      const int lo = lead_zero ? 1 : -n_max;
      for (int i = 0; i < m; ++i)
        dots[i] += static_cast<double>(lo) * vectors[i][axis];
      for (int v = lo; v <= n_max; ++v) {
        double div = 0.0;
        for (int i = 0; i < m; ++i) {
          const double d = dist_to_int(dots[i]);
          if (d > div) div = d;
        }
        const int s = std::max(prefix_max, std::abs(v));
        const double val = pw[s] * div;
        if (val < out.curve[s]) out.curve[s] = val;
        if (val < best) {
          best = val;
          n[axis] = v;
          best_n = n;
        }
        for (int i = 0; i < m; ++i) dots[i] += vectors[i][axis];
      }
      for (int i = 0; i < m; ++i)
        dots[i] -= static_cast<double>(n_max + 1) * vectors[i][axis];
      n[axis] = 0;
      return;
    }
    const int lo = lead_zero ? 0 : -n_max;
    for (int v = lo; v <= n_max; ++v) {
      for (int i = 0; i < m; ++i)
        dots[i] += static_cast<double>(v) * vectors[i][axis];
      n[axis] = v;
      self(self, axis + 1, lead_zero && v == 0,
           std::max(prefix_max, std::abs(v)));
      for (int i = 0; i < m; ++i)
        dots[i] -= static_cast<double>(v) * vectors[i][axis];
    }
    n[axis] = 0;
  };
  for (int i = 0; i < m; ++i) dots[i] = 0.0;
  rec(rec, 0, true, 0);

  for (int s = 2; s <= n_max; ++s)
    out.curve[s] = std::min(out.curve[s], out.curve[s - 1]);
  out.c_fit = out.curve[n_max];
  out.worst_n = best_n;
  const double half = n_max >= 2 ? out.curve[n_max / 2] : out.c_fit;
  out.doubling_ratio = half > 0.0 ? out.c_fit / half : (out.c_fit > 0 ? kInf : 1.0);
  out.pass = out.c_fit > floor_tol && out.c_fit >= decay_ratio * half;
  return out;
}

ScalarScan scalar_diophantine_scan(double a, double tau, int n_max,
                                   double floor_tol, double decay_ratio) {
  if (n_max < 1) throw ConfigInvalid("scan bound must be positive");
  ScalarScan out;
  out.value = a;
  double best = kInf, best_half = kInf;
  for (int q = 1; q <= n_max; ++q) {
    const double val =
        std::pow(static_cast<double>(q), tau) * dist_to_int(q * a);
    if (val < best) {
      best = val;
      out.worst_q = q;
    }
    if (q <= n_max / 2) best_half = std::min(best_half, val);
  }
  out.c_fit = best;
  const double half = n_max >= 2 ? best_half : best;
  out.pass = best > floor_tol && best >= decay_ratio * half;
  return out;
}

SdcConstruction sdc_from_diophantine(const std::vector<double>& a,
                                     const IntMatrix& A, double tau,
                                     int n_max) {
  const int dim = A.dim();
  if (static_cast<int>(a.size()) != dim)
    throw DimensionMismatch("coefficient count must equal the dimension");

  // commutant_basis both provides the powers and raises Derogatory when the
  // span {I, A, ..., A^(N-1)} degenerates.
  const std::vector<DMat> basis = commutant_basis(A);
  DMat rho{};
  for (int t = 0; t < dim; ++t)
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) rho[i][j] += a[t] * basis[t][i][j];

  SdcConstruction out{RotationMatrix(dim, rho), {}, {}, false};
  bool scalars_ok = true;
  for (int t = 0; t < dim; ++t) {
    if (a[t] == 0.0) continue;
    out.scalars.push_back(scalar_diophantine_scan(a[t], tau, n_max));
    scalars_ok = scalars_ok && out.scalars.back().pass;
  }
  std::vector<Vec> cols;
  for (int j = 0; j < dim; ++j) cols.push_back(out.rho.column(j));
  out.columns = sdc_check(cols, dim, tau, n_max);
  out.pass = scalars_ok && out.columns.pass;
  return out;
}

KroneckerResult kronecker_search(const std::vector<Vec>& m_columns, int dim,
                                 const Vec& y, int n,
                                 const KroneckerOptions& opt) {
  const int K = static_cast<int>(m_columns.size());
  if (dim < 1 || dim > kMaxDim)
    throw DimensionMismatch("torus dimension must be 1..3");
  if (K < 1 || K > 16) throw ConfigInvalid("need 1..16 matrix columns");
  if (n < 1) throw ConfigInvalid("search radius must be positive");
  const double count = std::pow(2.0 * n + 1.0, K);
  if (count > static_cast<double>(opt.budget))
    throw BudgetExceeded("enumeration of " + format_double(count) +
                         " points exceeds the budget of " +
                         std::to_string(opt.budget));

  KroneckerResult out;
  out.dim = dim;
  out.K = K;
  out.radius = n;
  out.curve.assign(n + 1, kInf);
  std::vector<double> cmin2(n + 1, kInf);

  std::vector<std::int64_t> p(K, 0), best_p;
  double best_e2 = kInf;

  auto canonical = [](const std::vector<std::int64_t>& v) {
    for (std::int64_t x : v) {
      if (x != 0) return x > 0;
    }
    return true;  // zero word counts as canonical
  };
  auto lex_less = [](const std::vector<std::int64_t>& a,
                     const std::vector<std::int64_t>& b) {
    for (std::size_t i = 0; i < a.size(); ++i)
      if (a[i] != b[i]) return a[i] < b[i];
    return false;
  };

  auto rec = [&](auto&& self, int axis, int prefix_max, bool prefix_zero,
                 const Vec& acc) -> void {
    if (axis == K - 1) {
      Vec t = acc;
      const Vec& c = m_columns[axis];
      for (int a = 0; a < dim; ++a)
        t[a] += static_cast<double>(-n) * c[a] - y[a];
      for (int v = -n; v <= n; ++v) {
        if (v == 0 && prefix_zero) {  // the zero word approximates nothing
          for (int a = 0; a < dim; ++a) t[a] += c[a];
          continue;
        }
        double e2 = 0.0;
        for (int a = 0; a < dim; ++a) {
          const double d = dist_to_int_signed(t[a]);
          e2 += d * d;
        }
        const int s = std::max(prefix_max, std::abs(v));
        if (e2 < cmin2[s]) cmin2[s] = e2;
        const double band =
            std::isfinite(best_e2) ? 1e-12 * std::max(best_e2, 1e-30) : 0.0;
        if (e2 < best_e2 - band) {
          best_e2 = e2;
          p[axis] = v;
          best_p = p;
        } else if (e2 <= best_e2 + band && !best_p.empty()) {
          p[axis] = v;
          const bool pc = canonical(p), bc = canonical(best_p);
          if ((pc && !bc) || (pc == bc && lex_less(p, best_p))) best_p = p;
        }
        for (int a = 0; a < dim; ++a) t[a] += c[a];
      }
      p[axis] = 0;
      return;
    }
    for (int v = -n; v <= n; ++v) {
      Vec t = acc;
      for (int a = 0; a < dim; ++a)
        t[a] += static_cast<double>(v) * m_columns[axis][a];
      p[axis] = v;
      self(self, axis + 1, std::max(prefix_max, std::abs(v)),
           prefix_zero && v == 0, t);
    }
    p[axis] = 0;
  };
  rec(rec, 0, 0, true, zero_vec());

  // Re-evaluate the winner from scratch (the scan accumulates increments).
  out.best_p = best_p;
  out.best_q.assign(dim, 0);
  double e2 = 0.0;
  for (int a = 0; a < dim; ++a) {
    double s = -y[a];
    for (int k = 0; k < K; ++k)
      s += static_cast<double>(best_p[k]) * m_columns[k][a];
    out.best_q[a] = static_cast<std::int64_t>(std::nearbyint(s));
    const double d = s - static_cast<double>(out.best_q[a]);
    e2 += d * d;
  }
  out.err = std::sqrt(e2);

  for (int s = 2; s <= n; ++s) cmin2[s] = std::min(cmin2[s], cmin2[s - 1]);
  for (int s = 1; s <= n; ++s) out.curve[s] = std::sqrt(cmin2[s]);

  std::vector<double> xs, ys;
  for (int s = 2; s <= n; s *= 2) {
    xs.push_back(static_cast<double>(s));
    ys.push_back(out.curve[s]);
  }
  out.dyadic_fit = fit_loglog(xs, ys);
  return out;
}

DimensionResult dimension_estimate(const std::vector<Vec>& rhos, int dim,
                                   int ell_max, int grid,
                                   std::int64_t budget) {
  const int K = static_cast<int>(rhos.size());
  if (dim < 1 || dim > kMaxDim)
    throw DimensionMismatch("torus dimension must be 1..3");
  if (K < 1) throw ConfigInvalid("need at least one vector");
  if (ell_max < 4) throw ConfigInvalid("ell_max must be at least 4");
  if (grid < 4) throw ConfigInvalid("target grid must be at least 4");
  if (l1_ball_count(K, ell_max) > static_cast<double>(budget))
    throw BudgetExceeded("word enumeration exceeds the budget");

  std::vector<int> ells;
  for (int l = 2; l <= ell_max; l *= 2) ells.push_back(l);
  if (ells.back() != ell_max) ells.push_back(ell_max);

  std::size_t targets = 1;
  for (int a = 0; a < dim; ++a) targets *= static_cast<std::size_t>(grid);
  std::vector<double> dist2(targets);

  DimensionResult out;
  double r_prev = kInf;
  const double inv_grid = 1.0 / static_cast<double>(grid);

  for (int ell : ells) {
    int W = std::isfinite(r_prev)
                ? std::min(grid / 2,
                           static_cast<int>(std::ceil(r_prev * grid)) + 2)
                : grid / 2;
    for (;;) {
      std::fill(dist2.begin(), dist2.end(), kInf);
      std::int64_t visited = 0;
      for_each_l1_word(rhos, dim, ell, [&](const std::vector<std::int64_t>&,
                                           const Vec& val) {
        ++visited;
        // Base cell of the value, then all targets within W cells.
        int base[kMaxDim] = {0, 0, 0};
        double vm[kMaxDim] = {0.0, 0.0, 0.0};
        for (int a = 0; a < dim; ++a) {
          vm[a] = mod1(val[a]);
          base[a] = static_cast<int>(vm[a] * grid);
          if (base[a] >= grid) base[a] = grid - 1;
        }
        const int lo = -W, hi = W;
        if (dim == 1) {
          for (int o = lo; o <= hi; ++o) {
            int t = (base[0] + o) % grid;
            if (t < 0) t += grid;
            const double d = dist_to_int(vm[0] - t * inv_grid);
            if (d * d < dist2[t]) dist2[t] = d * d;
          }
        } else if (dim == 2) {
          for (int o0 = lo; o0 <= hi; ++o0) {
            int t0 = (base[0] + o0) % grid;
            if (t0 < 0) t0 += grid;
            const double d0 = dist_to_int(vm[0] - t0 * inv_grid);
            const double d02 = d0 * d0;
            const std::size_t row = static_cast<std::size_t>(t0) * grid;
            for (int o1 = lo; o1 <= hi; ++o1) {
              int t1 = (base[1] + o1) % grid;
              if (t1 < 0) t1 += grid;
              const double d1 = dist_to_int(vm[1] - t1 * inv_grid);
              const double dd = d02 + d1 * d1;
              if (dd < dist2[row + t1]) dist2[row + t1] = dd;
            }
          }
        } else {
          for (int o0 = lo; o0 <= hi; ++o0) {
            int t0 = (base[0] + o0) % grid;
            if (t0 < 0) t0 += grid;
            const double d0 = dist_to_int(vm[0] - t0 * inv_grid);
            for (int o1 = lo; o1 <= hi; ++o1) {
              int t1 = (base[1] + o1) % grid;
              if (t1 < 0) t1 += grid;
              const double d1 = dist_to_int(vm[1] - t1 * inv_grid);
              const double d01 = d0 * d0 + d1 * d1;
              const std::size_t row =
                  (static_cast<std::size_t>(t0) * grid + t1) * grid;
              for (int o2 = lo; o2 <= hi; ++o2) {
                int t2 = (base[2] + o2) % grid;
                if (t2 < 0) t2 += grid;
                const double d2 = dist_to_int(vm[2] - t2 * inv_grid);
                const double dd = d01 + d2 * d2;
                if (dd < dist2[row + t2]) dist2[row + t2] = dd;
              }
            }
          }
        }
      });
      out.words_enumerated = std::max(out.words_enumerated, visited);
      bool uncovered = false;
      for (double d : dist2)
        if (!std::isfinite(d)) {
          uncovered = true;
          break;
        }
      if (!uncovered || W >= grid / 2) break;
      W = std::min(grid / 2, 2 * W + 1);
    }
    double worst = 0.0;
    for (double d : dist2)
      if (std::isfinite(d)) worst = std::max(worst, d);
    const double r = std::sqrt(worst);
    out.ells.push_back(static_cast<double>(ell));
    out.radii.push_back(r);
    r_prev = r;
  }

  // Generation check: the covering radius must keep shrinking once it is
  // meaningfully above the target spacing.
  const double stall_floor = 2.0 * std::sqrt(static_cast<double>(dim)) / grid;
  const std::size_t np = out.radii.size();
  if (np >= 3) {
    const double r_last = out.radii[np - 1];
    const double r_quarter = out.radii[np - 3];
    if (r_last > stall_floor && r_last > 0.7 * r_quarter)
      throw NotGenerating("covering radius stalls at " +
                          format_double(r_last));
  }

  // The first dyadic point samples only a handful of words and systematically
  // flattens the exponent; exclude it from the fit when enough points remain.
  std::vector<double> fx = out.ells, fy = out.radii;
  if (fx.size() > 2) {
    fx.erase(fx.begin());
    fy.erase(fy.begin());
  }
  const LineFit fit = fit_loglog(fx, fy);
  out.d_fit = -fit.slope;
  out.c_fit = std::exp(fit.intercept);
  out.fit_residual = fit.residual;
  return out;
}

DyadicNet dyadic_net_build(const std::vector<Vec>& rhos, int dim, double c,
                           double d, int m, std::int64_t budget) {
  const int K = static_cast<int>(rhos.size());
  if (dim < 1 || dim > kMaxDim)
    throw DimensionMismatch("torus dimension must be 1..3");
  if (K < 1) throw ConfigInvalid("need at least one vector");
  if (c <= 0.0 || d <= 0.0) throw ConfigInvalid("constants must be positive");
  if (m < 0) throw ConfigInvalid("level must be nonnegative");

  DyadicNet out;
  out.m = m;
  out.c = c;
  out.d = d;
  const std::int64_t net_bound = std::int64_t(1) << m;
  out.enum_word_bound = 4 * net_bound;
  if (out.enum_word_bound > std::int64_t(1) << 24 ||
      l1_ball_count(K, out.enum_word_bound) > static_cast<double>(budget))
    throw BudgetExceeded("word enumeration exceeds the budget");

  const double hi = c * std::pow(2.0, -d * m / 2.0);
  const double lo = c * std::pow(2.0, -d * (m + 1) / 2.0);

  for_each_l1_word(
      rhos, dim, static_cast<int>(out.enum_word_bound),
      [&](const std::vector<std::int64_t>& p, const Vec& val) {
        ++out.words_enumerated;
        std::int64_t l1 = 0;
        for (std::int64_t v : p) l1 += std::llabs(v);
        if (l1 == 0) return;
        Vec vm = zero_vec();
        double t2 = 0.0;
        for (int a = 0; a < dim; ++a) {
          vm[a] = mod1(val[a]);
          const double da = dist_to_int(vm[a]);
          t2 += da * da;
        }
        const double tn = std::sqrt(t2);
        if (tn > lo && tn <= hi) {
          NetWord w;
          w.p = p;
          w.value = vm;
          w.torus_norm = tn;
          w.word_norm = l1;
          out.shell.push_back(w);
          if (l1 <= net_bound) out.net.push_back(w);
        }
      });

  out.empty_shell = out.shell.empty();
  if (out.empty_shell) {
    out.covering_radius = 0.0;
  } else if (out.net.empty()) {
    out.covering_radius = kInf;
  } else {
    double worst = 0.0;
    for (const NetWord& s : out.shell) {
      double best = kInf;
      for (const NetWord& t : out.net)
        best = std::min(best, torus_dist(dim, s.value, t.value));
      worst = std::max(worst, best);
    }
    out.covering_radius = worst;
  }
  return out;
}

K0Result k0_for(double eta, int N) {
  if (!(eta > 0.0 && eta <= 1.0))
    throw ConfigInvalid("eta must lie in (0, 1]");
  if (N < 1) throw ConfigInvalid("dimension must be positive");
  K0Result out;
  const double raw = 2.0 * static_cast<double>(N) / (eta * eta);
  out.k0 = static_cast<int>(std::ceil(raw - 1e-12)) + 1;
  out.d = static_cast<double>(out.k0) / static_cast<double>(N);
  return out;
}

}  // namespace abctorus
