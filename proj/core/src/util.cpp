#include "abctorus/util.hpp"

#include <algorithm>
#include <atomic>
#include <thread>

#include "abctorus/errors.hpp"

namespace abctorus {

std::int64_t imat_det(int dim, const IMat& m) {
  switch (dim) {
    case 1:
      return m[0][0];
    case 2:
      return m[0][0] * m[1][1] - m[0][1] * m[1][0];
    case 3:
      return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
             m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
             m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    default:
      throw DimensionMismatch("determinant requested for dim " + std::to_string(dim));
  }
}

IMat imat_unimodular_inverse(int dim, const IMat& m) {
  const std::int64_t det = imat_det(dim, m);
  if (det != 1 && det != -1)
    throw NotInvertible("integer matrix with det " + std::to_string(det) +
                        " has no integer inverse");
  IMat adj{};
  if (dim == 1) {
    adj[0][0] = 1;
  } else if (dim == 2) {
    adj[0][0] = m[1][1];
    adj[0][1] = -m[0][1];
    adj[1][0] = -m[1][0];
    adj[1][1] = m[0][0];
  } else {
    // Adjugate = transposed cofactor matrix.
    auto cof = [&](int r, int c) {
      int r0 = (r + 1) % 3, r1 = (r + 2) % 3;
      int c0 = (c + 1) % 3, c1 = (c + 2) % 3;
      return m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0];
    };
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) adj[i][j] = cof(j, i);
  }
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) adj[i][j] *= det;  // det = ±1
  return adj;
}

double dmat_det(int dim, const DMat& m) {
  if (dim == 1) return m[0][0];
  if (dim == 2) return m[0][0] * m[1][1] - m[0][1] * m[1][0];
  return m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
         m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
         m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
}

DMat dmat_inverse(int dim, const DMat& m) {
  DMat inv{};
  if (dim == 1) {
    inv[0][0] = 1.0 / m[0][0];
    return inv;
  }
  if (dim == 2) {
    const double det = dmat_det(2, m);
    inv[0][0] = m[1][1] / det;
    inv[0][1] = -m[0][1] / det;
    inv[1][0] = -m[1][0] / det;
    inv[1][1] = m[0][0] / det;
    return inv;
  }
  const double det = dmat_det(3, m);
  inv[0][0] = (m[1][1] * m[2][2] - m[1][2] * m[2][1]) / det;
  inv[0][1] = (m[0][2] * m[2][1] - m[0][1] * m[2][2]) / det;
  inv[0][2] = (m[0][1] * m[1][2] - m[0][2] * m[1][1]) / det;
  inv[1][0] = (m[1][2] * m[2][0] - m[1][0] * m[2][2]) / det;
  inv[1][1] = (m[0][0] * m[2][2] - m[0][2] * m[2][0]) / det;
  inv[1][2] = (m[0][2] * m[1][0] - m[0][0] * m[1][2]) / det;
  inv[2][0] = (m[1][0] * m[2][1] - m[1][1] * m[2][0]) / det;
  inv[2][1] = (m[0][1] * m[2][0] - m[0][0] * m[2][1]) / det;
  inv[2][2] = (m[0][0] * m[1][1] - m[0][1] * m[1][0]) / det;
  return inv;
}

namespace {
std::atomic<int> g_max_threads{0};
}

void set_max_threads(int n) { g_max_threads.store(n < 0 ? 0 : n); }

int max_threads() {
  int n = g_max_threads.load();
  if (n == 0) {
    unsigned hw = std::thread::hardware_concurrency();
    n = hw == 0 ? 1 : static_cast<int>(hw);
  }
  return n;
}

void parallel_chunks(std::size_t n,
                     const std::function<void(std::size_t, std::size_t)>& fn,
                     std::size_t min_grain) {
  const int workers = max_threads();
  if (n == 0) return;
  if (workers <= 1 || n < 2 * min_grain) {
    fn(0, n);
    return;
  }
  const std::size_t nw = std::min<std::size_t>(workers, n / min_grain);
  std::vector<std::thread> pool;
  pool.reserve(nw);
  for (std::size_t w = 0; w < nw; ++w) {
    const std::size_t lo = n * w / nw;
    const std::size_t hi = n * (w + 1) / nw;
    pool.emplace_back([lo, hi, &fn] { fn(lo, hi); });
  }
  for (auto& t : pool) t.join();
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn,
                  std::size_t min_grain) {
  parallel_chunks(
      n,
      [&fn](std::size_t lo, std::size_t hi) {
        for (std::size_t i = lo; i < hi; ++i) fn(i);
      },
      min_grain);
}

std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  LineFit out;
  const std::size_t n = std::min(x.size(), y.size());
  if (n < 2) return out;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
  }
  const double d = n * sxx - sx * sx;
  if (d == 0.0) return out;
  out.slope = (n * sxy - sx * sy) / d;
  out.intercept = (sy - out.slope * sx) / n;
  double r2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = y[i] - (out.slope * x[i] + out.intercept);
    r2 += e * e;
  }
  out.residual = std::sqrt(r2 / static_cast<double>(n));
  out.points = static_cast<int>(n);
  return out;
}

LineFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> lx, ly;
  const std::size_t n = std::min(x.size(), y.size());
  lx.reserve(n);
  ly.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (x[i] > 0.0 && y[i] > 0.0) {
      lx.push_back(std::log(x[i]));
      ly.push_back(std::log(y[i]));
    }
  }
  return fit_line(lx, ly);
}

}  // namespace abctorus
