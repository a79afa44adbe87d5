#pragma once

// Internal helpers shared by the word-orbit computations (cocycles, box
// averages, mode tables): lifted orbit tracking for a family of torus maps
// over a value grid, and grid/vector utilities tied to that walk. Not part
// of the installed API.

#include <cstddef>
#include <string>
#include <vector>

#include "abctorus/errors.hpp"
#include "abctorus/fourier_map.hpp"
#include "abctorus/torus_ops.hpp"
#include "abctorus/util.hpp"

namespace abctorus {
namespace detail {

inline IMat imat_identity(int dim) {
  IMat m{};
  for (int i = 0; i < dim; ++i) m[i][i] = 1;
  return m;
}

inline std::size_t pow_size(int G, int dim) {
  std::size_t n = 1;
  for (int i = 0; i < dim; ++i) n *= static_cast<std::size_t>(G);
  return n;
}

/// Coordinates of a flat row-major index on {0,...,G-1}^dim / G (axis 0
/// slowest), matching GridFunction::point.
inline Vec flat_point(int dim, int G, std::size_t flat) {
  Vec x = zero_vec();
  for (int a = dim - 1; a >= 0; --a) {
    x[a] = static_cast<double>(flat % G) / G;
    flat /= G;
  }
  return x;
}

inline Vec reduce_vec(int dim, const Vec& x) {
  Vec y = zero_vec();
  for (int a = 0; a < dim; ++a) y[a] = mod1(x[a]);
  return y;
}

inline Vec normalize_vec(int dim, const Vec& v) {
  const double n = norm2(dim, v);
  Vec out = zero_vec();
  for (int a = 0; a < dim; ++a) out[a] = v[a] / n;
  return out;
}

/// One orbit step at a reduced point: mod1(M x + c + P(x)).
inline Vec advance(const FourierMap& f, const Vec& x, EvalScratch& ws) {
  const int dim = f.dim();
  double pv[kMaxDim] = {0, 0, 0};
  eval_periodic(f, x.data(), pv, ws);
  const Vec lin = mat_apply(dim, f.linear(), x);
  Vec out = zero_vec();
  for (int a = 0; a < dim; ++a) out[a] = mod1(lin[a] + f.constant()[a] + pv[a]);
  return out;
}

/// Displacement c + P(x) of a map over its linear part.
inline Vec displacement(const FourierMap& f, const Vec& x, EvalScratch& ws) {
  const int dim = f.dim();
  double pv[kMaxDim] = {0, 0, 0};
  eval_periodic(f, x.data(), pv, ws);
  Vec d = zero_vec();
  for (int a = 0; a < dim; ++a) d[a] = f.constant()[a] + pv[a];
  return d;
}

inline bool is_identity_linear(const FourierMap& f) {
  return mat_equal(f.dim(), f.linear(), imat_identity(f.dim()));
}

inline void require_identity_family(const std::vector<FourierMap>& family,
                                    const char* who) {
  if (family.empty())
    throw ConfigInvalid(std::string(who) + ": family must be nonempty");
  const int dim = family.front().dim();
  for (const auto& f : family) {
    if (f.dim() != dim)
      throw DimensionMismatch(std::string(who) + ": family dimensions differ");
    if (!is_identity_linear(f))
      throw ConfigInvalid(std::string(who) +
                          ": family maps must be homotopic to the identity");
  }
}

/// Walks words of a family on a value grid: `y` carries the lifted images of
/// every base grid point under the current word, advanced one generator
/// application at a time (inverse maps are built on first use).
struct WordWalker {
  int dim = 0;
  int G = 0;
  std::size_t np = 0;
  const std::vector<FourierMap>* fam = nullptr;
  std::vector<FourierMap> inv;
  std::vector<char> have_inv;
  std::vector<double> base;
  std::vector<double> y;
  std::vector<double> scratch;
  IVec cur = zero_ivec();

  WordWalker(const std::vector<FourierMap>& family, int grid)
      : dim(family.front().dim()),
        G(grid),
        np(pow_size(grid, family.front().dim())),
        fam(&family),
        inv(family.size()),
        have_inv(family.size(), 0),
        base(np * dim),
        y(np * dim),
        scratch(np * dim) {
    for (std::size_t p = 0; p < np; ++p) {
      const Vec x = flat_point(dim, G, p);
      for (int a = 0; a < dim; ++a) base[p * dim + a] = x[a];
    }
    y = base;
  }

  void apply(const FourierMap& m) {
    m.periodic_batch(y.data(), np, scratch.data());
    const Vec& c = m.constant();
    for (std::size_t p = 0; p < np; ++p)
      for (int a = 0; a < dim; ++a)
        y[p * dim + a] += c[a] + scratch[p * dim + a];
  }

  void step(int axis, int dir) {
    if (dir > 0) {
      apply((*fam)[axis]);
    } else {
      if (!have_inv[axis]) {
        InvertOptions io;
        io.grid = default_grid(dim);
        inv[axis] = invert((*fam)[axis], io).inv;
        have_inv[axis] = 1;
      }
      apply(inv[axis]);
    }
    cur[axis] += dir;
  }

  void goto_word(const IVec& p) {
    for (int axis = 0; axis < static_cast<int>(fam->size()); ++axis) {
      while (cur[axis] < p[axis]) step(axis, +1);
      while (cur[axis] > p[axis]) step(axis, -1);
    }
  }
};

/// Boustrophedon enumeration of the sup-ball ||p||_inf <= r over m axes:
/// consecutive entries differ by one unit step along one axis.
inline std::vector<IVec> snake_ball(int m, int r) {
  const int side = 2 * r + 1;
  std::size_t total = 1;
  for (int i = 0; i < m; ++i) total *= static_cast<std::size_t>(side);
  std::vector<IVec> out;
  out.reserve(total);
  for (std::size_t flat = 0; flat < total; ++flat) {
    int raw[kMaxDim] = {0, 0, 0};
    std::size_t rem = flat;
    for (int a = m - 1; a >= 0; --a) {
      raw[a] = static_cast<int>(rem % side);
      rem /= side;
    }
    IVec p = zero_ivec();
    int prefix = 0;
    for (int a = 0; a < m; ++a) {
      const int v = (prefix % 2 == 0) ? raw[a] : side - 1 - raw[a];
      p[a] = v - r;
      prefix += raw[a];
    }
    out.push_back(p);
  }
  return out;
}

}  // namespace detail
}  // namespace abctorus
