#include "abctorus/algebra.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>

#include "abctorus/errors.hpp"
#include "abctorus/torus_ops.hpp"

namespace abctorus {

namespace {

Eigen::MatrixXd to_eigen(int dim, const IMat& m) {
  Eigen::MatrixXd e(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) e(i, j) = static_cast<double>(m[i][j]);
  return e;
}

Eigen::MatrixXd to_eigen(int dim, const DMat& m) {
  Eigen::MatrixXd e(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) e(i, j) = m[i][j];
  return e;
}

DMat from_eigen(int dim, const Eigen::MatrixXd& e) {
  DMat m{};
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) m[i][j] = e(i, j);
  return m;
}

bool imat_is_identity(int dim, const IMat& m) {
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j)
      if (m[i][j] != (i == j ? 1 : 0)) return false;
  return true;
}

/// Splits x into integer part and residue in (-1/2, 1/2].
void split_mod_half(double x, std::int64_t& ip, double& r) {
  const double c = std::ceil(x - 0.5);
  ip = static_cast<std::int64_t>(c);
  r = x - c;
}

}  // namespace

IntMatrix::IntMatrix(int dim, const IMat& entries) : dim_(dim), m_(entries) {
  if (dim < 1 || dim > kMaxDim)
    throw DimensionMismatch("matrix dimension must be 1..3");
  for (int i = 0; i < kMaxDim; ++i)
    for (int j = 0; j < kMaxDim; ++j)
      if (i >= dim || j >= dim) m_[i][j] = 0;
  if (imat_det(dim, m_) != 1)
    throw ConfigInvalid("integer matrix must have determinant 1");

  Eigen::EigenSolver<Eigen::MatrixXd> es(to_eigen(dim, m_));
  spec_.resize(dim);
  hyperbolic_ = true;
  for (int i = 0; i < dim; ++i) {
    spec_[i] = es.eigenvalues()[i];
    if (std::abs(std::abs(spec_[i]) - 1.0) <= 1e-9) hyperbolic_ = false;
  }
  std::sort(spec_.begin(), spec_.end(),
            [](const std::complex<double>& a, const std::complex<double>& b) {
              if (std::abs(a) != std::abs(b)) return std::abs(a) < std::abs(b);
              return a.real() < b.real();
            });

  order_ = 0;
  if (!hyperbolic_) {
    // No element of SL(N,Z), N <= 3, has finite order above 12; entries of a
    // finite-order matrix's powers stay bounded, so a blow-up ends the scan.
    IMat p = m_;
    for (int k = 1; k <= 12; ++k) {
      if (imat_is_identity(dim, p)) {
        order_ = k;
        break;
      }
      std::int64_t mx = 0;
      for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) mx = std::max(mx, std::abs(p[i][j]));
      if (mx > (std::int64_t(1) << 40)) break;
      p = mat_mul(dim, p, m_);
    }
  }
}

IMat IntMatrix::inverse() const { return imat_unimodular_inverse(dim_, m_); }

RotationMatrix::RotationMatrix(int dim, const DMat& entries)
    : dim_(dim), m_(entries) {
  if (dim < 1 || dim > kMaxDim)
    throw DimensionMismatch("rotation matrix dimension must be 1..3");
  for (int i = dim; i < kMaxDim; ++i)
    for (int j = 0; j < kMaxDim; ++j) {
      m_[i][j] = 0.0;
      m_[j][i] = 0.0;
    }
}

RotationMatrix RotationMatrix::from_coeffs(const IntMatrix& A,
                                           const std::vector<double>& a) {
  const int dim = A.dim();
  if (static_cast<int>(a.size()) != dim)
    throw DimensionMismatch("coefficient count must equal the dimension");
  DMat rho{};
  DMat power{};  // A^(i-1), starting from the identity
  for (int i = 0; i < dim; ++i) power[i][i] = 1.0;
  for (int t = 0; t < dim; ++t) {
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) rho[i][j] += a[t] * power[i][j];
    // power <- power * A
    DMat next{};
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) {
        double s = 0.0;
        for (int l = 0; l < dim; ++l)
          s += power[i][l] * static_cast<double>(A.at(l, j));
        next[i][j] = s;
      }
    power = next;
  }
  return RotationMatrix(dim, rho);
}

Vec RotationMatrix::column(int j) const {
  Vec v = zero_vec();
  for (int i = 0; i < dim_; ++i) v[i] = m_[i][j];
  return v;
}

CommutationCheck check_commutation(const IntMatrix& A, const IntMatrix& B,
                                   const DMat& rho, int dim, double tol) {
  if (A.dim() != dim || B.dim() != dim)
    throw DimensionMismatch("commutation check dimensions disagree");
  CommutationCheck out;
  for (int i = 0; i < dim; ++i)
    for (int j = 0; j < dim; ++j) {
      double s = 0.0;
      for (int l = 0; l < dim; ++l)
        s += static_cast<double>(A.at(i, l)) * rho[l][j] -
             rho[i][l] * static_cast<double>(B.at(l, j));
      split_mod_half(s, out.integer_part[i][j], out.residue[i][j]);
      out.max_abs = std::max(out.max_abs, std::abs(out.residue[i][j]));
    }
  out.pass = out.max_abs <= tol;
  return out;
}

AffineABCAction::AffineABCAction(const IntMatrix& A, const IntMatrix& B,
                                 std::vector<RotationMatrix> rhos, double tol,
                                 bool enforce_certified)
    : A_(A), B_(B), rhos_(std::move(rhos)) {
  if (A_.dim() != B_.dim())
    throw DimensionMismatch("cyclic generator matrices disagree in dimension");
  if (rhos_.empty())
    throw ConfigInvalid("an action needs at least one rotation matrix");
  for (RotationMatrix& r : rhos_) {
    if (r.dim() != A_.dim())
      throw DimensionMismatch("rotation matrix dimension mismatch");
    r.set_certificate(check_commutation(A_, B_, r.entries(), A_.dim(), tol));
    if (enforce_certified && !r.certified())
      throw NotCommuting("rotation data violates the commutation constraint "
                         "(max residue " +
                         format_double(r.certificate().max_abs) + ")");
  }
}

FourierMap AffineABCAction::generator0() const {
  return FourierMap::affine(N(), A_.entries(), zero_vec());
}

FourierMap AffineABCAction::generator(int i, int k) const {
  if (i < 0 || i >= N() || k < 0 || k >= K())
    throw DimensionMismatch("generator index out of range");
  return FourierMap::translation(N(), rhos_[k].column(i));
}

double AffineABCAction::max_residue() const {
  double m = 0.0;
  for (const RotationMatrix& r : rhos_)
    m = std::max(m, r.certificate().max_abs);
  return m;
}

bool AffineABCAction::certified() const {
  for (const RotationMatrix& r : rhos_)
    if (!r.certified()) return false;
  return true;
}

std::int64_t GroupWord::word_norm() const {
  std::int64_t s = 0;
  for (std::int64_t v : p) s += std::abs(v);
  return s;
}

Vec GroupWord::torus_value(const AffineABCAction& act) const {
  const int n = act.N(), k = act.K();
  if (static_cast<int>(p.size()) != n * k)
    throw DimensionMismatch("word length must be N*K");
  Vec s = zero_vec();
  for (int kk = 0; kk < k; ++kk)
    for (int i = 0; i < n; ++i) {
      const double c = static_cast<double>(p[kk * n + i]);
      const Vec col = act.translation(i, kk);
      for (int a = 0; a < n; ++a) s[a] += c * col[a];
    }
  for (int a = 0; a < n; ++a) s[a] = mod1(s[a]);
  return s;
}

double GroupWord::torus_norm(const AffineABCAction& act) const {
  const Vec v = torus_value(act);
  return torus_dist(act.N(), v, zero_vec());
}

std::vector<DMat> commutant_basis(const IntMatrix& A) {
  const int dim = A.dim();
  std::vector<DMat> powers;
  Eigen::MatrixXd cur = Eigen::MatrixXd::Identity(dim, dim);
  const Eigen::MatrixXd a = to_eigen(dim, A.entries());
  for (int k = 0; k < dim; ++k) {
    powers.push_back(from_eigen(dim, cur));
    cur = cur * a;
  }
  // Nonderogatory <=> {I, A, ..., A^(N-1)} linearly independent.
  Eigen::MatrixXd stack(dim * dim, dim);
  for (int k = 0; k < dim; ++k) {
    const Eigen::MatrixXd pk = to_eigen(dim, powers[k]);
    for (int j = 0; j < dim; ++j)
      for (int i = 0; i < dim; ++i) stack(j * dim + i, k) = pk(i, j);
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(stack);
  const auto& sv = svd.singularValues();
  if (sv(0) <= 0.0 || sv(sv.size() - 1) <= 1e-9 * sv(0))
    throw Derogatory("matrix powers are linearly dependent");
  return powers;
}

SylvesterResult solve_sylvester_mod(const IntMatrix& A, const IntMatrix& B,
                                    const IMat& P) {
  const int dim = A.dim();
  if (B.dim() != dim)
    throw DimensionMismatch("Sylvester operands disagree in dimension");
  const int n2 = dim * dim;
  // Column-major vectorization: vec(AX - XB) = (I (x) A - B^T (x) I) vec(X).
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(n2, n2);
  for (int j = 0; j < dim; ++j)
    for (int i = 0; i < dim; ++i) {
      for (int k = 0; k < dim; ++k)
        M(j * dim + i, j * dim + k) += static_cast<double>(A.at(i, k));
      for (int l = 0; l < dim; ++l)
        M(j * dim + i, l * dim + i) -= static_cast<double>(B.at(l, j));
    }
  Eigen::VectorXd b(n2);
  for (int j = 0; j < dim; ++j)
    for (int i = 0; i < dim; ++i)
      b(j * dim + i) = static_cast<double>(P[i][j]);

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(
      M, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  const double smax = sv.size() ? sv(0) : 0.0;
  const double cutoff = 1e-8 * smax;

  // Pseudo-inverse solve with the rank cutoff.
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n2);
  for (int k = 0; k < sv.size(); ++k) {
    if (sv(k) > cutoff && sv(k) > 0.0) {
      const double c = svd.matrixU().col(k).dot(b) / sv(k);
      x += c * svd.matrixV().col(k);
    }
  }

  SylvesterResult out;
  const Eigen::VectorXd r = M * x - b;
  out.residual = r.lpNorm<Eigen::Infinity>();
  out.solvable = out.residual <= 1e-8;
  for (int j = 0; j < dim; ++j)
    for (int i = 0; i < dim; ++i) out.particular[i][j] = x(j * dim + i);
  for (int k = 0; k < sv.size(); ++k) {
    if (!(sv(k) > cutoff && sv(k) > 0.0)) {
      DMat h{};
      for (int j = 0; j < dim; ++j)
        for (int i = 0; i < dim; ++i)
          h[i][j] = svd.matrixV()(j * dim + i, k);
      out.homogeneous_basis.push_back(h);
    }
  }
  return out;
}

namespace {

/// Exhaustive scan over integer words with |p|_inf <= bound, sign-normalized
/// so the first nonzero coefficient is positive, keeping the best relation
/// under (l1 ascending, lexicographic descending).
struct RelationScan {
  int N = 0, NK = 0;
  std::int64_t bound = 0;
  double tol = 0.0;
  std::vector<Vec> cols;
  std::vector<std::int64_t> cur;
  std::vector<std::int64_t> best;
  std::int64_t best_l1 = 0;
  bool have_best = false;

  bool lex_greater(const std::vector<std::int64_t>& a,
                   const std::vector<std::int64_t>& b) const {
    for (std::size_t t = 0; t < a.size(); ++t) {
      if (a[t] != b[t]) return a[t] > b[t];
    }
    return false;
  }

  void offer(std::int64_t l1) {
    if (!have_best || l1 < best_l1 ||
        (l1 == best_l1 && lex_greater(cur, best))) {
      best = cur;
      best_l1 = l1;
      have_best = true;
    }
  }

  bool is_integer_point(const Vec& s) const {
    for (int c = 0; c < N; ++c)
      if (std::abs(s[c] - std::nearbyint(s[c])) > tol) return false;
    return true;
  }

  void scan(int axis, bool lead_zero, std::int64_t l1, const Vec& s) {
    if (have_best && l1 > best_l1) return;
    if (axis == NK - 1) {
      const std::int64_t lo = lead_zero ? 0 : -bound;
      Vec t = s;
      const Vec& col = cols[axis];
      for (int a = 0; a < N; ++a) t[a] += static_cast<double>(lo) * col[a];
      for (std::int64_t v = lo; v <= bound; ++v) {
        const std::int64_t tot = l1 + std::llabs(v);
        if (!(lead_zero && v == 0 && l1 == 0) &&
            (!have_best || tot <= best_l1) && is_integer_point(t)) {
          cur[axis] = v;
          offer(tot);
        }
        for (int a = 0; a < N; ++a) t[a] += col[a];
      }
      cur[axis] = 0;
      return;
    }
    const std::int64_t lo = lead_zero ? 0 : -bound;
    for (std::int64_t v = lo; v <= bound; ++v) {
      Vec t = s;
      for (int a = 0; a < N; ++a)
        t[a] += static_cast<double>(v) * cols[axis][a];
      cur[axis] = v;
      scan(axis + 1, lead_zero && v == 0, l1 + std::llabs(v), t);
    }
    cur[axis] = 0;
  }
};

}  // namespace

FaithfulResult check_faithful(const AffineABCAction& act,
                              std::int64_t denomBound, double tol) {
  if (denomBound < 1) throw ConfigInvalid("search bound must be positive");
  FaithfulResult out;
  out.bound_searched = denomBound;
  out.finite_order_linear = act.A().finite_order();

  RelationScan rs;
  rs.N = act.N();
  rs.NK = act.N() * act.K();
  rs.bound = denomBound;
  rs.tol = tol;
  for (int k = 0; k < act.K(); ++k)
    for (int i = 0; i < act.N(); ++i) rs.cols.push_back(act.translation(i, k));
  rs.cur.assign(rs.NK, 0);
  rs.scan(0, true, 0, zero_vec());

  out.relation_found = rs.have_best;
  if (rs.have_best) out.relation.p = rs.best;
  out.faithful = !out.relation_found && !out.finite_order_linear;
  return out;
}

double verify_relations(const AffineABCAction& act, int samples,
                        std::uint64_t seed) {
  const int n = act.N(), k = act.K();
  Rng rng(seed);
  const FourierMap g0 = act.generator0();
  std::vector<FourierMap> gens;
  for (int kk = 0; kk < k; ++kk)
    for (int i = 0; i < n; ++i) gens.push_back(act.generator(i, kk));

  double worst = 0.0;
  auto sample_gap = [&](const FourierMap& lhs, const FourierMap& rhs) {
    for (int s = 0; s < samples; ++s) {
      Vec x = zero_vec();
      for (int a = 0; a < n; ++a) x[a] = rng.uniform();
      worst = std::max(worst, torus_dist(n, lhs.evaluate(x), rhs.evaluate(x)));
    }
  };

  // Presentation relations: g0 g_{i,k} = (prod_j g_{j,k}^{B_{ji}}) g0.
  for (int kk = 0; kk < k; ++kk)
    for (int i = 0; i < n; ++i) {
      const FourierMap lhs = compose(g0, gens[kk * n + i], {}).map;
      FourierMap word = FourierMap::identity(n);
      for (int j = 0; j < n; ++j) {
        const std::int64_t e = act.B().at(j, i);
        Vec t = act.translation(j, kk);
        if (e < 0)
          for (int a = 0; a < n; ++a) t[a] = -t[a];
        const FourierMap step = FourierMap::translation(n, t);
        for (std::int64_t r = 0; r < std::llabs(e); ++r)
          word = compose(step, word, {}).map;
      }
      const FourierMap rhs = compose(word, g0, {}).map;
      sample_gap(lhs, rhs);
    }

  // Commutators of the translation generators.
  for (std::size_t u = 0; u < gens.size(); ++u)
    for (std::size_t v = u + 1; v < gens.size(); ++v) {
      const FourierMap lhs = compose(gens[u], gens[v], {}).map;
      const FourierMap rhs = compose(gens[v], gens[u], {}).map;
      sample_gap(lhs, rhs);
    }
  return worst;
}

bool compare_affine(const AffineABCAction& a1, const AffineABCAction& a2,
                    double tol) {
  if (a1.N() != a2.N() || a1.K() != a2.K())
    throw DimensionMismatch("actions disagree in dimension or rank");
  if (!mat_equal(a1.N(), a1.A().entries(), a2.A().entries()) ||
      !mat_equal(a1.N(), a1.B().entries(), a2.B().entries()))
    throw DimensionMismatch("actions have different linear data");
  for (int k = 0; k < a1.K(); ++k)
    for (int i = 0; i < a1.N(); ++i)
      for (int j = 0; j < a1.N(); ++j) {
        const double d = a1.rho(k).at(i, j) - a2.rho(k).at(i, j);
        if (dist_to_int(d) > tol) return false;
      }
  return true;
}

}  // namespace abctorus
