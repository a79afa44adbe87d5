// Affine actions of abelian-by-cyclic groups on the torus: integer matrices
// with cached spectra, rotation-coefficient matrices with the commutation
// certificate, the assembled affine action, and the algebraic checks
// (commutant bases, Sylvester systems mod Z, faithfulness, relations).
#pragma once

#include <complex>
#include <cstdint>
#include <vector>

#include "abctorus/fourier_map.hpp"
#include "abctorus/util.hpp"

namespace abctorus {

/// Element of SL(N,Z) with cached spectral data.
class IntMatrix {
 public:
  IntMatrix(int dim, const IMat& entries);

  int dim() const { return dim_; }
  const IMat& entries() const { return m_; }
  std::int64_t at(int i, int j) const { return m_[i][j]; }

  /// Complex eigenvalues (length = dim).
  const std::vector<std::complex<double>>& spectrum() const { return spec_; }
  /// True iff no eigenvalue lies within 1e-9 of the unit circle.
  bool hyperbolic() const { return hyperbolic_; }
  /// True iff some power k <= 12 equals the identity.
  bool finite_order() const { return order_ > 0; }
  /// The order when finite, 0 otherwise.
  int order() const { return order_; }
  /// Exact inverse (integer, since det = 1).
  IMat inverse() const;

 private:
  int dim_;
  IMat m_;
  std::vector<std::complex<double>> spec_;
  bool hyperbolic_ = false;
  int order_ = 0;
};

/// Result of reducing A*rho - rho*B into (-1/2, 1/2] entrywise.
struct CommutationCheck {
  DMat residue{};      // entries in (-1/2, 1/2]
  IMat integer_part{}; // the integer matrix P with A*rho - rho*B = P + residue
  double max_abs = 0.0;
  bool pass = false;
};

/// Real N x N matrix of rotation coefficients, entries read mod 1.
class RotationMatrix {
 public:
  RotationMatrix(int dim, const DMat& entries);
  /// rho = sum_i a[i] * A^(i-1): the general solution commuting with A.
  static RotationMatrix from_coeffs(const IntMatrix& A,
                                    const std::vector<double>& a);

  int dim() const { return dim_; }
  const DMat& entries() const { return m_; }
  double at(int i, int j) const { return m_[i][j]; }
  Vec column(int j) const;

  /// Attach a commutation certificate (kept for audit).
  void set_certificate(const CommutationCheck& c) {
    cert_ = c;
    certified_ = c.pass;
  }
  bool certified() const { return certified_; }
  const CommutationCheck& certificate() const { return cert_; }

 private:
  int dim_;
  DMat m_{};
  CommutationCheck cert_{};
  bool certified_ = false;
};

CommutationCheck check_commutation(const IntMatrix& A, const IntMatrix& B,
                                   const DMat& rho, int dim,
                                   double tol = 1e-9);

/// The affine action: g0 acts by x -> A x, and the translation generator
/// (i, k) acts by x -> x + (column i of rho_k).
class AffineABCAction {
 public:
  AffineABCAction(const IntMatrix& A, const IntMatrix& B,
                  std::vector<RotationMatrix> rhos, double tol = 1e-9,
                  bool enforce_certified = true);

  int N() const { return A_.dim(); }
  int K() const { return static_cast<int>(rhos_.size()); }
  const IntMatrix& A() const { return A_; }
  const IntMatrix& B() const { return B_; }
  const RotationMatrix& rho(int k) const { return rhos_[k]; }
  /// Translation vector of generator (i, k): column i of rho_k.
  Vec translation(int i, int k) const { return rhos_[k].column(i); }

  FourierMap generator0() const;
  FourierMap generator(int i, int k) const;

  /// Largest commutation residue across the K coefficient matrices.
  double max_residue() const;
  bool certified() const;

 private:
  IntMatrix A_;
  IntMatrix B_;
  std::vector<RotationMatrix> rhos_;
};

/// Word in the translation subgroup: integer coefficients over the N*K
/// translation generators, flattened as p[k*N + i].
struct GroupWord {
  std::vector<std::int64_t> p;

  std::int64_t word_norm() const;  // l1 norm of p
  /// Torus value sum p_{i,k} rho_{i,k} mod 1.
  Vec torus_value(const AffineABCAction& act) const;
  /// Distance of the torus value to 0.
  double torus_norm(const AffineABCAction& act) const;
};

/// {I, A, ..., A^(N-1)}; throws Derogatory when the powers are dependent
/// (equivalently, when some eigenvalue has geometric multiplicity > 1).
std::vector<DMat> commutant_basis(const IntMatrix& A);

struct SylvesterResult {
  bool solvable = false;
  double residual = 0.0;          // max abs of A*X - X*B - P at the solution
  DMat particular{};              // least-squares solution (valid if solvable)
  std::vector<DMat> homogeneous_basis;  // null space of X -> A*X - X*B
};

/// Least-squares solution of A*X = X*B + P over the reals via the vectorized
/// Kronecker system, plus an orthonormal basis of the homogeneous solutions.
/// Unsolvable is reported as a value (solvable = false), not an error.
SylvesterResult solve_sylvester_mod(const IntMatrix& A, const IntMatrix& B,
                                    const IMat& P);

struct FaithfulResult {
  bool faithful = false;
  bool relation_found = false;
  bool finite_order_linear = false;  // the cyclic generator has finite order
  GroupWord relation;                // populated when relation_found
  std::int64_t bound_searched = 0;
};

/// Bounded search for an integer relation sum p_{i,k} rho_{i,k} = 0 mod Z^N
/// with 0 < |p|_inf <= denomBound. Among relations it returns the first in
/// (word norm ascending, then lexicographic descending) order, with the sign
/// normalized so the first nonzero coefficient is positive.
FaithfulResult check_faithful(const AffineABCAction& act,
                              std::int64_t denomBound, double tol = 1e-9);

/// Evaluates both sides of each presentation relation and each commutator of
/// translation generators at `samples` seeded random points; returns the
/// maximal torus distance.
double verify_relations(const AffineABCAction& act, int samples,
                        std::uint64_t seed = 2026);

/// Entrywise mod-1 equality of the rotation data within tol; decides
/// conjugacy-by-homotopic-to-identity among affine actions.
bool compare_affine(const AffineABCAction& a1, const AffineABCAction& a2,
                    double tol = 1e-9);

}  // namespace abctorus
