// Tests for the Diophantine machinery: scalar and simultaneous scans, the
// certified rotation-matrix construction, Kronecker approximation search,
// covering-dimension estimation, dyadic nets, and the generator-count rule.
#include <cmath>
#include <vector>

#include "abctorus/algebra.hpp"
#include "abctorus/diophantine.hpp"
#include "abctorus/errors.hpp"
#include "abctorus/util.hpp"
#include "doctest.h"

using namespace abctorus;

namespace {

IntMatrix cat_map() {
  IMat m{};
  m[0][0] = 2;
  m[0][1] = 1;
  m[1][0] = 1;
  m[1][1] = 1;
  return IntMatrix(2, m);
}

const double kGolden = 0.6180339887498949;  // (sqrt 5 - 1) / 2
const double kSqrt2m1 = std::sqrt(2.0) - 1.0;
const double kSqrt3m1 = std::sqrt(3.0) - 1.0;

}  // namespace

TEST_CASE("scalar scan certifies quadratic irrationals") {
  const ScalarScan g = scalar_diophantine_scan(kGolden, 2.0, 4096);
  CHECK(g.pass);
  CHECK(g.worst_q == 1);
  CHECK(g.c_fit == doctest::Approx(0.3819660112501051).epsilon(1e-12));

  const ScalarScan s2 = scalar_diophantine_scan(kSqrt2m1, 2.0, 4096);
  CHECK(s2.pass);
  CHECK(s2.c_fit == doctest::Approx(0.41421356237309515).epsilon(1e-12));

  const ScalarScan s3 = scalar_diophantine_scan(kSqrt3m1, 2.0, 4096);
  CHECK(s3.pass);
  CHECK(s3.c_fit == doctest::Approx(0.26794919243112281).epsilon(1e-12));
}

TEST_CASE("scalar scan rejects rationals") {
  const ScalarScan q = scalar_diophantine_scan(0.25, 2.0, 64);
  CHECK_FALSE(q.pass);
  CHECK(q.worst_q == 4);
  CHECK(q.c_fit == 0.0);

  const ScalarScan t = scalar_diophantine_scan(1.0 / 3.0, 2.0, 64);
  CHECK_FALSE(t.pass);
  CHECK(t.c_fit < 1e-9);
}

TEST_CASE("sdc_check certifies the golden dilation on the 2-torus") {
  const double phi = 1.6180339887498949;
  const std::vector<Vec> cols = {Vec{phi, 0.0, 0.0}, Vec{0.0, phi, 0.0}};
  const SdcResult r = sdc_check(cols, 2, 2.0, 100);
  CHECK(r.pass);
  CHECK(r.c_fit == doctest::Approx(0.3819660112501051).epsilon(1e-12));
  CHECK(r.worst_n[0] == 0);
  CHECK(r.worst_n[1] == 1);
  CHECK(r.doubling_ratio == doctest::Approx(1.0));
  // The per-radius curve is a running minimum, hence nonincreasing.
  for (int s = 2; s <= r.n_max; ++s) CHECK(r.curve[s] <= r.curve[s - 1]);
}

TEST_CASE("sdc_check flags rational resonances with an exact zero") {
  const std::vector<Vec> cols = {Vec{0.25, 0.5, 0.0}, Vec{0.125, 0.75, 0.0}};
  const SdcResult r = sdc_check(cols, 2, 2.0, 8);
  CHECK_FALSE(r.pass);
  CHECK(r.c_fit == 0.0);
  // The reported minimizer must re-evaluate to an exact resonance.
  double div = 0.0;
  for (const Vec& v : cols) {
    const double dot = v[0] * static_cast<double>(r.worst_n[0]) +
                       v[1] * static_cast<double>(r.worst_n[1]);
    div = std::max(div, dist_to_int(dot));
  }
  CHECK(div == 0.0);
}

TEST_CASE("sdc_check is invariant under integer shifts of the vectors") {
  const std::vector<Vec> a = {Vec{kSqrt2m1, kSqrt3m1, 0.0},
                              Vec{kGolden, kSqrt2m1, 0.0}};
  std::vector<Vec> b = a;
  b[0][0] += 2.0;
  b[0][1] -= 3.0;
  b[1][1] += 1.0;
  const SdcResult ra = sdc_check(a, 2, 2.0, 50);
  const SdcResult rb = sdc_check(b, 2, 2.0, 50);
  CHECK(ra.c_fit == doctest::Approx(rb.c_fit).epsilon(1e-10));
  CHECK(ra.pass == rb.pass);
}

TEST_CASE("certified construction from quadratic-pair coefficients") {
  const SdcConstruction c =
      sdc_from_diophantine({kSqrt2m1, kSqrt3m1}, cat_map(), 2.0, 4096);
  CHECK(c.pass);
  CHECK(c.columns.pass);
  CHECK(c.columns.c_fit == doctest::Approx(0.26794919243112281).epsilon(1e-9));
  REQUIRE(c.scalars.size() == 2);
  CHECK(c.scalars[0].pass);
  CHECK(c.scalars[1].pass);
  // rho = a0 I + a1 A, stored as a lift (no mod-1 reduction).
  CHECK(c.rho.at(0, 0) ==
        doctest::Approx(kSqrt2m1 + 2.0 * kSqrt3m1).epsilon(1e-14));
  CHECK(c.rho.at(0, 1) == doctest::Approx(kSqrt3m1).epsilon(1e-14));
  CHECK(c.rho.at(1, 0) == doctest::Approx(kSqrt3m1).epsilon(1e-14));
  CHECK(c.rho.at(1, 1) ==
        doctest::Approx(kSqrt2m1 + kSqrt3m1).epsilon(1e-14));
}

TEST_CASE("construction from rational coefficients fails its certificate") {
  const SdcConstruction c =
      sdc_from_diophantine({1.0 / 3.0, 0.0}, cat_map(), 2.0, 256);
  CHECK_FALSE(c.pass);
  CHECK_FALSE(c.scalars.empty());
  CHECK_FALSE(c.scalars[0].pass);
  CHECK_FALSE(c.columns.pass);
}

TEST_CASE("construction propagates the derogatory failure") {
  CHECK_THROWS_AS(
      sdc_from_diophantine({0.5, 0.5}, IntMatrix(2, identity_imat()), 2.0, 64),
      Derogatory);
}

TEST_CASE("kronecker_search reproduces the golden-ratio approximants") {
  const KroneckerResult r =
      kronecker_search({Vec{0.6180339887, 0.0, 0.0}}, 1, zero_vec(), 10);
  REQUIRE(r.best_p.size() == 1);
  REQUIRE(r.best_q.size() == 1);
  CHECK(r.best_p[0] == 8);
  CHECK(r.best_q[0] == 5);
  CHECK(r.err == doctest::Approx(0.0557280904).epsilon(1e-9));
  // The reported error re-evaluates to the same distance.
  const double fresh = std::fabs(8.0 * 0.6180339887 - 5.0);
  CHECK(std::fabs(r.err - fresh) < 1e-12);
  CHECK(std::abs(r.best_p[0]) <= r.radius);
}

TEST_CASE("kronecker_search lands exactly on constructed targets") {
  const std::vector<Vec> cols = {Vec{kSqrt2m1, kGolden, 0.0},
                                 Vec{kSqrt3m1, std::sqrt(5.0) - 2.0, 0.0}};
  Vec y = zero_vec();
  for (int a = 0; a < 2; ++a)
    y[a] = mod1(3.0 * cols[0][a] - 2.0 * cols[1][a]);
  const KroneckerResult r = kronecker_search(cols, 2, y, 6);
  REQUIRE(r.best_p.size() == 2);
  CHECK(r.best_p[0] == 3);
  CHECK(r.best_p[1] == -2);
  CHECK(r.err < 1e-12);
}

TEST_CASE("kronecker error curve is monotone and consistent across radii") {
  const std::vector<Vec> cols = {Vec{kSqrt2m1, 0.0, 0.0},
                                 Vec{kSqrt3m1, 0.0, 0.0}};
  const KroneckerResult r16 = kronecker_search(cols, 1, Vec{0.3, 0.0, 0.0}, 16);
  for (int s = 2; s <= 16; ++s) CHECK(r16.curve[s] <= r16.curve[s - 1]);
  CHECK(r16.err == doctest::Approx(r16.curve[16]).epsilon(1e-12));
  const KroneckerResult r8 = kronecker_search(cols, 1, Vec{0.3, 0.0, 0.0}, 8);
  CHECK(r8.err == doctest::Approx(r16.curve[8]).epsilon(1e-11));
  CHECK(r8.err >= r16.err - 1e-15);
}

TEST_CASE("kronecker approximation error decays with the search radius") {
  const std::vector<Vec> cols = {Vec{kSqrt2m1, 0.0, 0.0},
                                 Vec{kSqrt3m1, 0.0, 0.0}};
  const KroneckerResult r = kronecker_search(cols, 1, zero_vec(), 64);
  CHECK(r.curve[64] < r.curve[4] / 8.0);
  CHECK(r.dyadic_fit.slope < -1.2);
}

TEST_CASE("kronecker_search enforces its enumeration budget") {
  KroneckerOptions opt;
  opt.budget = 100;  // (2*5+1)^2 = 121 exceeds this
  CHECK_THROWS_AS(kronecker_search({Vec{kSqrt2m1, 0.0, 0.0},
                                    Vec{kSqrt3m1, 0.0, 0.0}},
                                   1, zero_vec(), 5, opt),
                  BudgetExceeded);
}

TEST_CASE("dimension estimate recovers the line for golden data") {
  const DimensionResult r =
      dimension_estimate({Vec{kGolden, 0.0, 0.0}}, 1, 64, 1024);
  CHECK(r.d_fit == doctest::Approx(1.0).epsilon(0.2));
  CHECK(r.words_enumerated == 129);  // the l1 ball of radius 64 in Z
  REQUIRE(r.radii.size() == 6);
  for (std::size_t i = 1; i < r.radii.size(); ++i)
    CHECK(r.radii[i] < r.radii[i - 1]);
}

TEST_CASE("dimension estimate matches the generator-to-dimension ratio") {
  const double t = std::cbrt(2.0);
  // Two generators on the 1-torus: d should approach 2.
  const DimensionResult r2 = dimension_estimate(
      {Vec{t - 1.0, 0.0, 0.0}, Vec{t * t - 1.0, 0.0, 0.0}}, 1, 64, 1024);
  CHECK(std::fabs(r2.d_fit - 2.0) <= 0.2);

  // Four generators on the 2-torus as a product of two independent pairs.
  const DimensionResult r4 = dimension_estimate(
      {Vec{t - 1.0, 0.0, 0.0}, Vec{t * t - 1.0, 0.0, 0.0},
       Vec{0.0, 1.0 / t, 0.0}, Vec{0.0, 1.0 / (t * t), 0.0}},
      2, 64, 64);
  CHECK(std::fabs(r4.d_fit - 2.0) <= 0.2);
}

TEST_CASE("dimension estimate for three generators converges from below") {
  const double q = std::pow(2.0, 0.25);
  const std::vector<Vec> gens = {Vec{q - 1.0, 0.0, 0.0},
                                 Vec{q * q - 1.0, 0.0, 0.0},
                                 Vec{q * q * q - 1.0, 0.0, 0.0}};
  // At word radius 64 the dyadic window is short and the fitted exponent
  // sits measurably below 3; by radius 256 it reaches the expected value.
  const DimensionResult r64 = dimension_estimate(gens, 1, 64, 1024);
  CHECK(r64.d_fit > 2.3);
  CHECK(r64.d_fit < 2.9);
  const DimensionResult r256 =
      dimension_estimate(gens, 1, 256, 1024, 2000000000LL);
  CHECK(std::fabs(r256.d_fit - 3.0) <= 0.2);
  CHECK(r256.d_fit > r64.d_fit);
}

TEST_CASE("dimension estimate rejects rational-only data") {
  CHECK_THROWS_AS(
      dimension_estimate({Vec{0.25, 0.0, 0.0}, Vec{0.0, 0.25, 0.0}}, 2, 64, 64),
      NotGenerating);
}

TEST_CASE("dimension estimate enforces its word budget") {
  const double t = std::cbrt(2.0);
  CHECK_THROWS_AS(
      dimension_estimate({Vec{t - 1.0, 0.0, 0.0}, Vec{t * t - 1.0, 0.0, 0.0},
                          Vec{0.0, 1.0 / t, 0.0}, Vec{0.0, 1.0 / (t * t), 0.0}},
                         2, 64, 64, 1000000),
      BudgetExceeded);
}

TEST_CASE("dyadic net members satisfy both shell inequalities as stored") {
  const double t = std::cbrt(2.0);
  const std::vector<Vec> gens = {Vec{t - 1.0, 0.0, 0.0},
                                 Vec{t * t - 1.0, 0.0, 0.0}};
  const DyadicNet net = dyadic_net_build(gens, 1, 0.5, 2.0, 4);
  CHECK_FALSE(net.empty_shell);
  CHECK_FALSE(net.net.empty());
  CHECK(net.enum_word_bound == 64);
  const double hi = 0.5 * std::pow(2.0, -2.0 * 4 / 2.0);
  const double lo = 0.5 * std::pow(2.0, -2.0 * 5 / 2.0);
  for (const NetWord& w : net.shell) {
    CHECK(w.torus_norm > lo);
    CHECK(w.torus_norm <= hi);
    // Stored norm matches the stored value and the value matches the word.
    CHECK(dist_to_int(w.value[0]) == doctest::Approx(w.torus_norm).epsilon(1e-15));
    const double fresh =
        mod1(static_cast<double>(w.p[0]) * gens[0][0] +
             static_cast<double>(w.p[1]) * gens[1][0]);
    CHECK(std::fabs(fresh - w.value[0]) < 1e-12);
    std::int64_t l1 = std::llabs(w.p[0]) + std::llabs(w.p[1]);
    CHECK(l1 == w.word_norm);
  }
  for (const NetWord& w : net.net) CHECK(w.word_norm <= 16);
  // Covering radius re-derives from the stored shell and net.
  double worst = 0.0;
  for (const NetWord& s : net.shell) {
    double best = 1.0;
    for (const NetWord& n : net.net)
      best = std::min(best, torus_dist(1, s.value, n.value));
    worst = std::max(worst, best);
  }
  CHECK(worst == doctest::Approx(net.covering_radius).epsilon(1e-15));
}

TEST_CASE("dyadic net flags an empty shell") {
  const DyadicNet net = dyadic_net_build({Vec{0.25, 0.0, 0.0}}, 1, 0.5, 2.0, 3);
  CHECK(net.empty_shell);
  CHECK(net.net.empty());
  CHECK(net.covering_radius == 0.0);
}

TEST_CASE("dyadic net cardinality grows at the expected dyadic rate") {
  const double t = std::cbrt(2.0);
  const std::vector<Vec> gens = {Vec{t - 1.0, 0.0, 0.0},
                                 Vec{t * t - 1.0, 0.0, 0.0}};
  std::vector<double> ms, log2counts;
  for (int m = 3; m <= 7; ++m) {
    const DyadicNet net = dyadic_net_build(gens, 1, 0.5, 2.0, m);
    REQUIRE_FALSE(net.net.empty());
    ms.push_back(static_cast<double>(m));
    log2counts.push_back(std::log2(static_cast<double>(net.net.size())));
  }
  // d*N/2 = 1 for d=2, N=1: the net size should roughly double per level.
  const LineFit f = fit_line(ms, log2counts);
  CHECK(f.slope > 0.6);
  CHECK(f.slope < 1.4);
}

TEST_CASE("dyadic net enforces its enumeration budget") {
  CHECK_THROWS_AS(
      dyadic_net_build({Vec{kGolden, 0.0, 0.0}, Vec{kSqrt2m1, 0.0, 0.0}}, 1,
                       0.5, 2.0, 10, 1000),
      BudgetExceeded);
}

TEST_CASE("generator count rule") {
  const K0Result a = k0_for(1.0, 2);
  CHECK(a.k0 == 5);
  CHECK(a.d == doctest::Approx(2.5));
  CHECK(2.0 / a.d < 1.0 * 1.0);

  const K0Result b = k0_for(0.5, 2);
  CHECK(b.k0 == 17);
  CHECK(2.0 / b.d < 0.25);

  CHECK(k0_for(0.1, 2).k0 == 401);
  CHECK(k0_for(0.1, 3).k0 == 601);
  CHECK(k0_for(1.0, 1).k0 == 3);

  // Monotone growth as eta shrinks.
  CHECK(k0_for(0.1, 2).k0 > k0_for(0.2, 2).k0);
  CHECK(k0_for(0.2, 2).k0 > k0_for(0.5, 2).k0);

  CHECK_THROWS_AS(k0_for(0.0, 2), ConfigInvalid);
  CHECK_THROWS_AS(k0_for(-0.3, 2), ConfigInvalid);
  CHECK_THROWS_AS(k0_for(1.5, 2), ConfigInvalid);
  CHECK_THROWS_AS(k0_for(0.5, 0), ConfigInvalid);
}
