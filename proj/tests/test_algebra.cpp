// Tests for the affine action algebra: commutation certificates, commutant
// bases, Sylvester systems, faithfulness search, relation verification, and
// the rotation-data conjugacy invariant.
#include <cmath>
#include <vector>

#include "abctorus/algebra.hpp"
#include "abctorus/errors.hpp"
#include "doctest.h"

using namespace abctorus;

namespace {

IMat cat_map() {
  IMat m = identity_imat(2);
  m[0] = {2, 1, 0};
  m[1] = {1, 1, 0};
  return m;
}

IntMatrix cat2() { return IntMatrix(2, cat_map()); }

DMat two_param_rho(double a0, double a1) {
  // rho = a0*I + a1*A for A = [[2,1],[1,1]].
  DMat r{};
  r[0][0] = a0 + 2 * a1;
  r[0][1] = a1;
  r[1][0] = a1;
  r[1][1] = a0 + a1;
  return r;
}

AffineABCAction two_param_action(double a0, double a1) {
  IntMatrix A = cat2();
  return AffineABCAction(A, A, {RotationMatrix(2, two_param_rho(a0, a1))});
}

}  // namespace

TEST_CASE("integer matrix caches spectrum and flags") {
  IntMatrix A = cat2();
  CHECK(A.hyperbolic());
  CHECK(!A.finite_order());
  // Eigenvalues (3 +- sqrt(5))/2.
  const double lam = (3.0 + std::sqrt(5.0)) / 2.0;
  CHECK(std::abs(std::abs(A.spectrum()[1]) - lam) < 1e-12);
  CHECK(std::abs(std::abs(A.spectrum()[0]) - 1.0 / lam) < 1e-12);

  IMat rot = identity_imat(2);
  rot[0] = {0, -1, 0};
  rot[1] = {1, 0, 0};
  IntMatrix R(2, rot);
  CHECK(!R.hyperbolic());
  CHECK(R.finite_order());
  CHECK(R.order() == 4);

  IMat shear = identity_imat(2);
  shear[0] = {1, 1, 0};
  IntMatrix S(2, shear);
  CHECK(!S.hyperbolic());
  CHECK(!S.finite_order());
}

TEST_CASE("determinant must be one") {
  IMat m = identity_imat(2);
  m[0] = {2, 0, 0};  // det 2
  CHECK_THROWS_AS(IntMatrix(2, m), Error);
  IMat flip = identity_imat(2);
  flip[0][0] = -1;  // det -1
  CHECK_THROWS_AS(IntMatrix(2, flip), Error);
}

TEST_CASE("unimodular inverse is exact") {
  IntMatrix A = cat2();
  IMat inv = A.inverse();
  IMat prod = mat_mul(2, A.entries(), inv);
  CHECK(mat_equal(2, prod, identity_imat(2)));
}

TEST_CASE("two-parameter family commutes for any coefficients") {
  Rng rng(314);
  IntMatrix A = cat2();
  for (int t = 0; t < 25; ++t) {
    const double a0 = rng.uniform(-2.0, 2.0);
    const double a1 = rng.uniform(-2.0, 2.0);
    CommutationCheck c =
        check_commutation(A, A, two_param_rho(a0, a1), 2);
    CHECK(c.pass);
    CHECK(c.max_abs < 1e-12);
  }
}

TEST_CASE("zero rotation data commutes and corrupt data fails") {
  IntMatrix A = cat2();
  DMat zero{};
  CHECK(check_commutation(A, A, zero, 2).pass);

  Rng rng(999);
  DMat bad{};
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) bad[i][j] = rng.uniform(0.05, 0.45);
  CommutationCheck c = check_commutation(A, A, bad, 2);
  CHECK(!c.pass);
  CHECK(c.max_abs > 1e-3);
}

TEST_CASE("residues are reduced into the half-open unit interval") {
  // A*rho - rho*B with an entry landing exactly on 1/2 keeps +1/2.
  IntMatrix A = cat2();
  DMat rho{};
  rho[0][0] = 0.25;  // A rho - rho A has entries {-(1/4),...}
  CommutationCheck c = check_commutation(A, A, rho, 2);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      CHECK(c.residue[i][j] <= 0.5);
      CHECK(c.residue[i][j] > -0.5);
    }
}

TEST_CASE("commutant basis is the matrix powers") {
  IntMatrix A = cat2();
  std::vector<DMat> basis = commutant_basis(A);
  REQUIRE(basis.size() == 2);
  CHECK(basis[0][0][0] == 1.0);
  CHECK(basis[0][0][1] == 0.0);
  CHECK(basis[1][0][0] == 2.0);
  CHECK(basis[1][0][1] == 1.0);

  // Every element of the span commutes with A.
  Rng rng(11);
  for (int t = 0; t < 100; ++t) {
    const double c0 = rng.uniform(-1.0, 1.0);
    const double c1 = rng.uniform(-1.0, 1.0);
    DMat X{};
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        X[i][j] = c0 * basis[0][i][j] + c1 * basis[1][i][j];
    double worst = 0.0;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        double ax = 0.0, xa = 0.0;
        for (int l = 0; l < 2; ++l) {
          ax += static_cast<double>(A.at(i, l)) * X[l][j];
          xa += X[i][l] * static_cast<double>(A.at(l, j));
        }
        worst = std::max(worst, std::abs(ax - xa));
      }
    CHECK(worst < 1e-12);
  }
}

TEST_CASE("one-dimensional commutant is the scalar 1") {
  IMat one = identity_imat(1);
  IntMatrix A(1, one);
  std::vector<DMat> basis = commutant_basis(A);
  REQUIRE(basis.size() == 1);
  CHECK(basis[0][0][0] == 1.0);
}

TEST_CASE("unipotent shear is nonderogatory") {
  IMat shear = identity_imat(2);
  shear[0] = {1, 1, 0};
  IntMatrix S(2, shear);
  std::vector<DMat> basis = commutant_basis(S);
  REQUIRE(basis.size() == 2);
  // Span elements commute with S.
  DMat X{};
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      X[i][j] = 0.3 * basis[0][i][j] - 0.7 * basis[1][i][j];
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      double ax = 0.0, xa = 0.0;
      for (int l = 0; l < 2; ++l) {
        ax += static_cast<double>(S.at(i, l)) * X[l][j];
        xa += X[i][l] * static_cast<double>(S.at(l, j));
      }
      CHECK(std::abs(ax - xa) < 1e-12);
    }
}

TEST_CASE("identity matrix is derogatory") {
  IntMatrix I2(2, identity_imat(2));
  CHECK_THROWS_AS(commutant_basis(I2), Error);
}

TEST_CASE("sylvester: homogeneous system for equal matrices has rank-2 null space") {
  IntMatrix A = cat2();
  SylvesterResult r = solve_sylvester_mod(A, A, IMat{});
  CHECK(r.solvable);
  CHECK(r.residual < 1e-12);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) CHECK(std::abs(r.particular[i][j]) < 1e-12);
  REQUIRE(r.homogeneous_basis.size() == 2);
  // Each basis element commutes with A and lies in span{I, A}.
  for (const DMat& X : r.homogeneous_basis) {
    double worst = 0.0;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        double ax = 0.0, xa = 0.0;
        for (int l = 0; l < 2; ++l) {
          ax += static_cast<double>(A.at(i, l)) * X[l][j];
          xa += X[i][l] * static_cast<double>(A.at(l, j));
        }
        worst = std::max(worst, std::abs(ax - xa));
      }
    CHECK(worst < 1e-10);
    // span{I, A} membership: solve X ~ c0 I + c1 A by matching two entries
    // and verify the rest.
    const double c1 = X[0][1];           // A[0][1] = 1, I[0][1] = 0
    const double c0 = X[1][1] - c1;      // X[1][1] = c0 + c1
    CHECK(std::abs(X[0][0] - (c0 + 2 * c1)) < 1e-10);
    CHECK(std::abs(X[1][0] - c1) < 1e-10);
  }
}

TEST_CASE("sylvester: disjoint spectra force a trivial null space") {
  IntMatrix A = cat2();
  IMat shear = identity_imat(2);
  shear[0] = {1, 1, 0};
  IntMatrix S(2, shear);
  SylvesterResult r = solve_sylvester_mod(A, S, IMat{});
  CHECK(r.solvable);
  CHECK(r.homogeneous_basis.empty());
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) CHECK(std::abs(r.particular[i][j]) < 1e-12);
}

TEST_CASE("sylvester: identity right-hand side is obstructed by the trace") {
  IntMatrix A = cat2();
  SylvesterResult r = solve_sylvester_mod(A, A, identity_imat(2));
  CHECK(!r.solvable);
  CHECK(r.residual > 1e-3);
}

TEST_CASE("sylvester: constructed right-hand sides are solvable") {
  Rng rng(2718);
  IntMatrix A = cat2();
  IMat shear = identity_imat(2);
  shear[0] = {1, 1, 0};
  IntMatrix S(2, shear);
  for (int t = 0; t < 20; ++t) {
    // P = A X0 - X0 B with integer X0 keeps P integral.
    IMat X0{};
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j)
        X0[i][j] = rng.uniform_int(-3, 3);
    IMat P{};
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        std::int64_t s = 0;
        for (int l = 0; l < 2; ++l)
          s += A.at(i, l) * X0[l][j] - X0[i][l] * S.at(l, j);
        P[i][j] = s;
      }
    SylvesterResult r = solve_sylvester_mod(A, S, P);
    CHECK(r.solvable);
    CHECK(r.residual < 1e-8);
    // Verify the particular solution directly.
    double worst = 0.0;
    for (int i = 0; i < 2; ++i)
      for (int j = 0; j < 2; ++j) {
        double s = 0.0;
        for (int l = 0; l < 2; ++l)
          s += static_cast<double>(A.at(i, l)) * r.particular[l][j] -
               r.particular[i][l] * static_cast<double>(S.at(l, j));
        worst = std::max(worst, std::abs(s - static_cast<double>(P[i][j])));
      }
    CHECK(worst < 1e-8);
  }
}

TEST_CASE("half-integer rotation data is unfaithful with relation (2,0)") {
  IntMatrix A = cat2();
  DMat half{};
  half[0][0] = 0.5;
  half[1][1] = 0.5;
  AffineABCAction act(A, A, {RotationMatrix(2, half)});
  FaithfulResult r = check_faithful(act, 100);
  CHECK(!r.faithful);
  REQUIRE(r.relation_found);
  REQUIRE(r.relation.p.size() == 2);
  CHECK(r.relation.p[0] == 2);
  CHECK(r.relation.p[1] == 0);
  CHECK(r.relation.torus_norm(act) < 1e-9);
}

TEST_CASE("zero rotation data is unfaithful with relation (1,0)") {
  IntMatrix A = cat2();
  AffineABCAction act(A, A, {RotationMatrix(2, DMat{})});
  FaithfulResult r = check_faithful(act, 100);
  CHECK(!r.faithful);
  REQUIRE(r.relation_found);
  CHECK(r.relation.p[0] == 1);
  CHECK(r.relation.p[1] == 0);
}

TEST_CASE("diophantine rotation data is faithful up to a large bound") {
  AffineABCAction act =
      two_param_action(std::sqrt(2.0) - 1.0, std::sqrt(3.0) - 1.0);
  FaithfulResult r = check_faithful(act, 10000);
  CHECK(r.faithful);
  CHECK(!r.relation_found);
  CHECK(r.bound_searched == 10000);
}

TEST_CASE("rational rotation data within the bound always yields a relation") {
  Rng rng(31337);
  IntMatrix A = cat2();
  for (int t = 0; t < 10; ++t) {
    const std::int64_t d = rng.uniform_int(2, 40);
    const std::int64_t num0 = rng.uniform_int(0, d - 1);
    const std::int64_t num1 = rng.uniform_int(0, d - 1);
    if (num0 == 0 && num1 == 0) continue;
    const double a0 = static_cast<double>(num0) / static_cast<double>(d);
    const double a1 = static_cast<double>(num1) / static_cast<double>(d);
    AffineABCAction act(A, A, {RotationMatrix(2, two_param_rho(a0, a1))});
    FaithfulResult r = check_faithful(act, d);
    CHECK(r.relation_found);
    if (r.relation_found) CHECK(r.relation.torus_norm(act) < 1e-9);
  }
}

TEST_CASE("relations hold for certified actions") {
  Rng rng(161803);
  for (int t = 0; t < 5; ++t) {
    AffineABCAction act =
        two_param_action(rng.uniform(0.0, 1.0), rng.uniform(0.0, 1.0));
    CHECK(verify_relations(act, 1000) < 1e-12);
  }
}

TEST_CASE("corrupted rotation data breaks the relations") {
  IntMatrix A = cat2();
  DMat rho = two_param_rho(0.3, 0.4);
  rho[0][1] += 0.1;
  AffineABCAction act(A, A, {RotationMatrix(2, rho)}, 1e-9,
                      /*enforce_certified=*/false);
  CHECK(!act.certified());
  CHECK(verify_relations(act, 200) >= 0.05);
}

TEST_CASE("certifying constructor rejects bad rotation data") {
  IntMatrix A = cat2();
  DMat rho = two_param_rho(0.3, 0.4);
  rho[0][1] += 0.1;
  CHECK_THROWS_AS(AffineABCAction(A, A, {RotationMatrix(2, rho)}), Error);
}

TEST_CASE("affine comparison is a mod-1 entrywise test") {
  AffineABCAction a = two_param_action(0.3, 0.25);
  AffineABCAction b = two_param_action(0.3, 0.25);
  CHECK(compare_affine(a, b));
  AffineABCAction c = two_param_action(0.3 + 1.0, 0.25);  // integer shift
  CHECK(compare_affine(a, c));
  AffineABCAction d = two_param_action(0.6, 0.25);
  CHECK(!compare_affine(a, d));
}

TEST_CASE("group words evaluate against the action") {
  AffineABCAction act = two_param_action(0.25, 0.0);  // rho = diag(1/4,1/4)
  GroupWord w;
  w.p = {4, 0};
  CHECK(w.word_norm() == 4);
  CHECK(w.torus_norm(act) < 1e-12);  // 4 * (1/4, 0) = (1, 0) = 0 mod 1
  GroupWord u;
  u.p = {1, 2};
  const Vec v = u.torus_value(act);
  CHECK(std::abs(v[0] - 0.25) < 1e-12);
  CHECK(std::abs(v[1] - 0.5) < 1e-12);
}
