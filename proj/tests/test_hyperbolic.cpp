// Tests for the hyperbolic toolbox: spectral data of integer automorphisms,
// the geometric-series conjugacy back to the linear model, family repair by
// conjugation, rotation vectors, word oscillation, Fourier-decay diagnostics
// of abelian families, Lyapunov exponents, invariant splittings, and the
// derivative cocycle along a measurable line field.
#include <cmath>
#include <complex>
#include <vector>

#include "abctorus/algebra.hpp"
#include "abctorus/errors.hpp"
#include "abctorus/grid.hpp"
#include "abctorus/hyperbolic.hpp"
#include "abctorus/torus_ops.hpp"
#include "doctest.h"

using namespace abctorus;

namespace {

constexpr double kPi = 3.141592653589793238462643383279;
const double kGolden = 0.6180339887498949;       // (sqrt 5 - 1) / 2
const double kCatLog = 0.9624236501192069;       // ln((3 + sqrt 5)/2)
const double kCatExpand = 2.618033988749895;     // (3 + sqrt 5) / 2
const double kCatContract = 0.3819660112501051;  // (3 - sqrt 5) / 2
const double kPlastic = 1.3247179572447460;      // root of x^3 = x + 1

IntMatrix cat_map() {
  IMat m{};
  m[0][0] = 2;
  m[0][1] = 1;
  m[1][0] = 1;
  m[1][1] = 1;
  return IntMatrix(2, m);
}

// cat + eps sin(4 pi x1) (1,1): one mode n = (2,0), c = (-i eps/2)(1,1).
FourierMap perturbed_cat(double eps) {
  std::vector<Mode> ms(1);
  ms[0].n = IVec{2, 0, 0};
  ms[0].c[0] = std::complex<double>(0, -eps / 2);
  ms[0].c[1] = std::complex<double>(0, -eps / 2);
  return FourierMap(2, cat_map().entries(), zero_vec(), ms);
}

// Small trigonometric conjugator; `scale` is the largest mode amplitude.
FourierMap small_conjugator(double scale) {
  std::vector<Mode> ms(4);
  ms[0].n = IVec{1, 0, 0};
  ms[0].c = {std::complex<double>(3e-4, -1e-4),
             std::complex<double>(2e-4, 5e-5)};
  ms[1].n = IVec{0, 1, 0};
  ms[1].c = {std::complex<double>(-2e-4, 4e-4),
             std::complex<double>(1e-4, -3e-4)};
  ms[2].n = IVec{1, 1, 0};
  ms[2].c = {std::complex<double>(1e-4, 2e-4),
             std::complex<double>(-2e-4, 1e-4)};
  ms[3].n = IVec{1, -1, 0};
  ms[3].c = {std::complex<double>(-5e-5, 1.5e-4),
             std::complex<double>(8e-5, -6e-5)};
  for (auto& m : ms) {
    m.c[0] *= scale / 3e-4;
    m.c[1] *= scale / 3e-4;
  }
  IMat id{};
  id[0][0] = 1;
  id[1][1] = 1;
  return FourierMap(2, id, zero_vec(), ms);
}

FourierMap conjugated(const FourierMap& inner, const FourierMap& phi,
                      const FourierMap& phi_inv, int grid,
                      int out_degree = -1) {
  ComposeOptions co;
  co.grid = grid;
  co.out_degree = out_degree;
  return compose(phi_inv, compose(inner, phi, co).map, co).map;
}

Vec unstable_dir() {
  const double n = std::sqrt(1.0 + kGolden * kGolden);
  return Vec{1.0 / n, kGolden / n, 0};
}

Vec stable_dir() {
  const double s = -(1.0 + std::sqrt(5.0)) / 2.0;
  const double n = std::sqrt(1.0 + s * s);
  return Vec{1.0 / n, s / n, 0};
}

}  // namespace

TEST_CASE("spectral data orders the spectrum and rejects unit modulus") {
  const SpectralData sd = spectral_data(cat_map());
  REQUIRE(sd.stable.size() == 1);
  REQUIRE(sd.unstable.size() == 1);
  CHECK(std::abs(std::abs(sd.stable.front()) - kCatContract) < 1e-12);
  CHECK(std::abs(std::abs(sd.unstable.front()) - kCatExpand) < 1e-12);
  // eigenvectors are real for the cat map; compare as lines
  Vec u = {sd.unstable_vecs[0][0].real(), sd.unstable_vecs[0][1].real(), 0};
  Vec s = {sd.stable_vecs[0][0].real(), sd.stable_vecs[0][1].real(), 0};
  CHECK(line_angle(2, u, unstable_dir()) < 1e-10);
  CHECK(line_angle(2, s, stable_dir()) < 1e-10);
  CHECK(c_slow_bound(sd, sd) == 1.0);

  // 3-d companion of x^3 = x + 1: one real expansion, a contracting pair
  IMat comp{};
  comp[0][1] = 1;
  comp[1][2] = 1;
  comp[2][0] = 1;
  comp[2][1] = 1;
  const SpectralData sp = spectral_data(IntMatrix(3, comp));
  REQUIRE(sp.unstable.size() == 1);
  REQUIRE(sp.stable.size() == 2);
  CHECK(std::abs(std::abs(sp.unstable.front()) - kPlastic) < 1e-12);
  CHECK(std::abs(std::abs(sp.stable[0]) - std::abs(sp.stable[1])) < 1e-12);
  CHECK(std::abs(std::abs(sp.stable[0]) - 1.0 / std::sqrt(kPlastic)) < 1e-12);
  CHECK(c_slow_bound(sp, sp) == 1.0);

  IMat par{};  // parabolic shear: eigenvalue 1 twice
  par[0][0] = 1;
  par[0][1] = 1;
  par[1][1] = 1;
  CHECK_THROWS_AS(spectral_data(IntMatrix(2, par)), NoHyperbolicity);
  IMat rot{};  // quarter turn: spectrum on the unit circle
  rot[0][1] = -1;
  rot[1][0] = 1;
  CHECK_THROWS_AS(spectral_data(IntMatrix(2, rot)), NoHyperbolicity);
  IMat neg{};  // minus identity, det 1, eigenvalue -1
  neg[0][0] = -1;
  neg[1][1] = -1;
  CHECK_THROWS_AS(spectral_data(IntMatrix(2, neg)), NoHyperbolicity);
}

TEST_CASE("conjugacy of an affine perturbation is the exact constant") {
  // A x + c conjugates to A by h = id + g with (A - I) g = c
  const Vec c = {0.003, -0.007, 0};
  const FourierMap a = FourierMap::affine(2, cat_map().entries(), c);
  FranksOptions fo;
  fo.grid = 64;
  fo.tol = 1e-10;
  const FranksConjugacy h = franks_conjugacy(a, cat_map(), fo);
  CHECK(h.residual < 1e-10);
  CHECK(h.contraction == 0.0);

  DMat ami{};  // A - I
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      ami[i][j] = static_cast<double>(cat_map().entries()[i][j]) -
                  (i == j ? 1.0 : 0.0);
  const Vec want = mat_apply(2, dmat_inverse(2, ami), c);
  Rng rng(31);
  for (int s = 0; s < 25; ++s) {
    const Vec x = {rng.uniform(), rng.uniform(), 0};
    const Vec g = h.periodic(x);
    CHECK(std::abs(g[0] - want[0]) < 1e-11);
    CHECK(std::abs(g[1] - want[1]) < 1e-11);
  }
}

TEST_CASE("conjugacy of the perturbed automorphism meets its tolerance") {
  const double eps = 0.01;
  const FourierMap a = perturbed_cat(eps);

  // fixed point at 0: derivative trace there is 3 + 4 pi eps
  const DMat j0 = a.jacobian(zero_vec());
  CHECK(std::abs(j0[0][0] + j0[1][1] - (3.0 + 4.0 * kPi * eps)) < 1e-10);

  FranksOptions fo;
  fo.grid = 128;
  const FranksConjugacy h = franks_conjugacy(a, cat_map(), fo);
  CHECK(h.residual < 1e-8);
  CHECK(h.contraction > 0.2);
  CHECK(h.contraction < 0.4);
  CHECK(h.depth >= 20);
  CHECK(h.depth <= 32);

  // the conjugacy is genuinely nonlinear and genuinely not band-limited
  double supg = 0;
  for (int i = 0; i < 32; ++i) {
    const Vec x = {(i + 0.4) / 32.0, 0.37, 0};
    const Vec g = h.periodic(x);
    supg = std::max(supg, std::max(std::abs(g[0]), std::abs(g[1])));
  }
  CHECK(supg > 1e-3);
  CHECK(h.projection_tail > 1e-8);
  CHECK(h.projection_tail < 1e-3);

  // pointwise inverse round trip
  Rng rng(7);
  double worst = 0;
  for (int s = 0; s < 50; ++s) {
    const Vec y = {rng.uniform(), rng.uniform(), 0};
    const Vec x = h.inverse(y);
    const Vec hy = h.evaluate(x);
    worst = std::max(worst,
                     std::max(std::abs(hy[0] - y[0]), std::abs(hy[1] - y[1])));
  }
  CHECK(worst < 1e-10);

  CHECK_THROWS_AS(franks_conjugacy(perturbed_cat(0.3), cat_map(), fo),
                  NotContractive);
  // linear part must match the model exactly
  const FourierMap t = FourierMap::translation(2, Vec{0.1, 0.2, 0});
  CHECK_THROWS_AS(franks_conjugacy(t, cat_map(), fo), ConfigInvalid);
}

TEST_CASE("conjugacy recovers a smooth conjugator uniquely") {
  const FourierMap phi = small_conjugator(3e-4);
  InvertOptions io;
  io.grid = 128;
  const FourierMap phi_inv = invert(phi, io).inv;
  const FourierMap abar_map =
      FourierMap::affine(2, cat_map().entries(), zero_vec());
  const FourierMap aprime = conjugated(abar_map, phi, phi_inv, 128);
  REQUIRE(mat_equal(2, aprime.linear(), cat_map().entries()));

  FranksOptions fo;
  fo.grid = 128;
  const FranksConjugacy h = franks_conjugacy(aprime, cat_map(), fo);
  CHECK(h.residual < 1e-10);

  // hyperbolicity forces uniqueness, so h must be phi itself
  Rng rng(11);
  double worst = 0;
  for (int s = 0; s < 100; ++s) {
    const Vec x = {rng.uniform(), rng.uniform(), 0};
    const Vec hx = h.evaluate(x);
    const Vec px = phi.evaluate(x, true);
    worst = std::max(worst,
                     std::max(std::abs(hx[0] - px[0]), std::abs(hx[1] - px[1])));
  }
  CHECK(worst < 1e-10);

  // repairing the matching conjugated translation recovers the translation
  const Vec rho = {0.41421356237309515, 0.7320508075688773, 0};
  const FourierMap t =
      conjugated(FourierMap::translation(2, rho), phi, phi_inv, 128);
  const FourierMap r = conjugate_by(h, t, 64);
  double maxmode = 0;
  for (const auto& md : r.modes())
    for (int c2 = 0; c2 < 2; ++c2)
      maxmode = std::max(maxmode, std::abs(md.c[c2]));
  CHECK(maxmode < 1e-8);
  CHECK(std::abs(r.constant()[0] - rho[0]) < 1e-10);
  CHECK(std::abs(r.constant()[1] - rho[1]) < 1e-10);

  CHECK_THROWS_AS(conjugate_by(h, abar_map, 64), ConfigInvalid);
}

TEST_CASE("rotation vector of translations and conjugated translations") {
  const Vec rho = {0.41421356237309515, 0.7320508075688773, 0};
  const FourierMap tau = FourierMap::translation(2, rho);
  const MeasureEstimate exact = rotation_vector(tau, Vec{0.1, 0.9, 0}, 5000);
  CHECK(std::abs(exact.rotation[0] - rho[0]) < 1e-14);
  CHECK(std::abs(exact.rotation[1] - rho[1]) < 1e-14);
  CHECK(exact.error_bar < 1e-12);

  const FourierMap phi = small_conjugator(3e-4);
  InvertOptions io;
  io.grid = 128;
  const FourierMap t = conjugated(tau, phi, invert(phi, io).inv, 128);
  const MeasureEstimate me = rotation_vector(t, Vec{0.123, 0.456, 0}, 20000);
  CHECK(std::abs(me.rotation[0] - rho[0]) < 1e-5);
  CHECK(std::abs(me.rotation[1] - rho[1]) < 1e-5);
  CHECK(me.error_bar < 1e-4);

  const FourierMap cat_affine =
      FourierMap::affine(2, cat_map().entries(), zero_vec());
  CHECK_THROWS_AS(rotation_vector(cat_affine, zero_vec(), 5000),
                  ConfigInvalid);
  CHECK_THROWS_AS(rotation_vector(tau, zero_vec(), 2), ConfigInvalid);
}

TEST_CASE("lyapunov exponents of the standard examples") {
  const FourierMap a0 =
      FourierMap::affine(2, cat_map().entries(), zero_vec());
  const LyapunovResult l0 = lyapunov_exponents(a0, Vec{0.3, 0.7, 0}, 20000);
  REQUIRE(l0.exponents.size() == 2);
  CHECK(l0.exponents[0] >= l0.exponents[1]);
  CHECK(std::abs(l0.exponents[0] - kCatLog) < 5e-5);
  CHECK(std::abs(l0.exponents[1] + kCatLog) < 5e-5);

  // a rigid translation has derivative exactly the identity
  const FourierMap tr = FourierMap::translation(2, Vec{0.3, 0.4, 0});
  const LyapunovResult l1 = lyapunov_exponents(tr, Vec{0.1, 0.2, 0}, 2000);
  CHECK(l1.exponents[0] == 0.0);
  CHECK(l1.exponents[1] == 0.0);

  const FourierMap phi = small_conjugator(3e-4);
  InvertOptions io;
  io.grid = 128;
  const FourierMap t = conjugated(
      FourierMap::translation(2, Vec{0.41421356237309515, 0.7320508075688773, 0}),
      phi, invert(phi, io).inv, 128);
  const LyapunovResult l2 = lyapunov_exponents(t, Vec{0.2, 0.9, 0}, 20000);
  CHECK(std::abs(l2.exponents[0]) < 1e-4);
  CHECK(std::abs(l2.exponents[1]) < 1e-4);

  const LyapunovResult l3 =
      lyapunov_exponents(perturbed_cat(0.01), Vec{0.3, 0.7, 0}, 50000);
  CHECK(std::abs(l3.exponents[0] - kCatLog) < 5e-3);
  CHECK(std::abs(l3.exponents[0] + l3.exponents[1]) < 1e-12);  // area kept

  CHECK_THROWS_AS(lyapunov_exponents(a0, zero_vec(), 999), ConfigInvalid);
}

TEST_CASE("splitting estimate matches the linear model and tracks bumps") {
  const FourierMap a0 =
      FourierMap::affine(2, cat_map().entries(), zero_vec());
  SplittingOptions so;
  so.grid = 32;
  const SplittingEstimate s0 = splitting_estimate(a0, so);
  double au = 0, as2 = 0;
  for (std::size_t f = 0; f < s0.unstable.npoints(); ++f) {
    const Vec u = {s0.unstable.at(f)[0], s0.unstable.at(f)[1], 0};
    const Vec s = {s0.stable.at(f)[0], s0.stable.at(f)[1], 0};
    au = std::max(au, line_angle(2, u, unstable_dir()));
    as2 = std::max(as2, line_angle(2, s, stable_dir()));
  }
  CHECK(au < 1e-7);
  CHECK(as2 < 1e-7);
  CHECK(s0.equivariance_unstable < 1e-7);
  CHECK(s0.equivariance_stable < 1e-7);
  CHECK(s0.flag_angle == 0.0);

  const SplittingEstimate s1 = splitting_estimate(perturbed_cat(0.01), so);
  double dev_u = 0, dev_s = 0;
  for (std::size_t f = 0; f < s1.unstable.npoints(); ++f) {
    const Vec u = {s1.unstable.at(f)[0], s1.unstable.at(f)[1], 0};
    const Vec s = {s1.stable.at(f)[0], s1.stable.at(f)[1], 0};
    dev_u = std::max(dev_u, line_angle(2, u, unstable_dir()));
    dev_s = std::max(dev_s, line_angle(2, s, stable_dir()));
  }
  // the field genuinely varies with x, at the scale of the perturbation
  CHECK(dev_u > 1e-3);
  CHECK(dev_u < 0.1);
  CHECK(dev_s > 1e-3);
  CHECK(dev_s < 0.1);
  CHECK(s1.equivariance_unstable < 1e-6);
  CHECK(s1.equivariance_stable < 1e-6);
  CHECK(s1.last_change_unstable < 1e-6);
  CHECK(s1.last_change_stable < 1e-6);

  IMat rot{};
  rot[0][1] = -1;
  rot[1][0] = 1;
  const FourierMap elliptic = FourierMap::affine(2, rot, zero_vec());
  CHECK_THROWS_AS(splitting_estimate(elliptic, so), NoHyperbolicity);

  // two applications cannot settle to the tolerance
  SplittingOptions shallow;
  shallow.grid = 8;
  shallow.iters = 2;
  CHECK_THROWS_AS(splitting_estimate(perturbed_cat(0.01), shallow),
                  NoHyperbolicity);
}

TEST_CASE("oscillation of commuting families") {
  const Vec r1 = {0.41421356237309515, 0.7320508075688773, 0};
  const Vec r2 = {0.6180339887498949, 0.2360679774997896, 0};
  std::vector<IVec> ps;
  for (int k : {1, 2, 4, 8, 16, 32, 64, 128, 200}) ps.push_back(IVec{k, 0, 0});
  for (int k : {200, 128, 64, 32, 16, 8, 4, 2, 1}) ps.push_back(IVec{k, k, 0});

  // pure translations: degenerate, no fit
  const std::vector<FourierMap> pure = {FourierMap::translation(2, r1),
                                        FourierMap::translation(2, r2)};
  const OscillationReport rp = oscillation(pure, ps);
  for (const auto& r : rp.rows) {
    CHECK(r.osc < 1e-12);
    CHECK(r.osc_upper >= r.osc);
  }
  CHECK_FALSE(rp.fit_valid);
  CHECK(std::isnan(rp.c_bound));

  // conjugated translations: bounded oscillation, flat fitted exponent
  const FourierMap phi = small_conjugator(3e-4);
  InvertOptions io;
  io.grid = 128;
  const FourierMap phi_inv = invert(phi, io).inv;
  const std::vector<FourierMap> fam = {
      conjugated(FourierMap::translation(2, r1), phi, phi_inv, 128),
      conjugated(FourierMap::translation(2, r2), phi, phi_inv, 128)};
  OscillationOptions oo;
  const IntMatrix ca = cat_map();
  oo.a = &ca;
  oo.b = &ca;
  const OscillationReport rep = oscillation(fam, ps, oo);
  REQUIRE(rep.fit_valid);
  for (const auto& r : rep.rows) CHECK(r.osc < 0.02);
  CHECK(std::abs(rep.c_hat) < 0.25);
  CHECK(rep.c_bound == 1.0);

  CHECK_THROWS_AS(
      oscillation({FourierMap::affine(2, cat_map().entries(), zero_vec())},
                  ps),
      ConfigInvalid);
}

TEST_CASE("fourier decay flags a broken family and clears a repaired one") {
  // rho = 0.1 I + 0.05 A commutes with the cat matrix, so translations by
  // its columns satisfy the intertwining identity with B = A^t = A
  const IntMatrix ca = cat_map();
  const Vec r1 = {0.2, 0.05, 0};
  const Vec r2 = {0.05, 0.15, 0};
  const std::vector<FourierMap> pure = {FourierMap::translation(2, r1),
                                        FourierMap::translation(2, r2)};
  DecayOptions dop;
  dop.grid = 64;
  dop.p_radius = 2;
  const DecayReport d0 = fourier_decay_diagnostic(pure, ca, ca, 8, dop);
  CHECK(d0.max_nonzero_mode < 1e-12);
  CHECK(d0.transform_residual == 0.0);
  CHECK(d0.rows.size() == 25);

  const FourierMap phi = small_conjugator(1.5e-3);
  InvertOptions io;
  io.grid = 256;
  const FourierMap phi_inv = invert(phi, io).inv;
  const std::vector<FourierMap> broken = {
      conjugated(pure[0], phi, phi_inv, 256, 48),
      conjugated(pure[1], phi, phi_inv, 256, 48)};
  const DecayReport d1 = fourier_decay_diagnostic(broken, ca, ca, 8, dop);
  CHECK(d1.max_nonzero_mode > 1e-3);
  CHECK(d1.transform_residual > 1e-4);
  CHECK(d1.pairs_checked > 0);

  const FourierMap abar_map =
      FourierMap::affine(2, cat_map().entries(), zero_vec());
  const FourierMap aprime = conjugated(abar_map, phi, phi_inv, 256, 48);
  FranksOptions fo;
  fo.grid = 128;
  const FranksConjugacy h = franks_conjugacy(aprime, ca, fo);
  const std::vector<FourierMap> repaired = {conjugate_by(h, broken[0], 64),
                                            conjugate_by(h, broken[1], 64)};
  const DecayReport d2 = fourier_decay_diagnostic(repaired, ca, ca, 8, dop);
  CHECK(d2.max_nonzero_mode < 1e-6);
  CHECK(d2.transform_residual < 1e-6);

  CHECK_THROWS_AS(fourier_decay_diagnostic(pure, ca, ca, 40, dop),
                  ConfigInvalid);
  CHECK_THROWS_AS(
      fourier_decay_diagnostic({pure[0]}, ca, ca, 8, dop),
      DimensionMismatch);  // word space is 1-d, coefficient matrix is 2-d
}

TEST_CASE("cocycle log norm along line fields") {
  const FourierMap a0 =
      FourierMap::affine(2, cat_map().entries(), zero_vec());
  FoliationField fu(2, 16);
  const Vec u = unstable_dir();
  for (std::size_t f = 0; f < fu.npoints(); ++f) {
    fu.at(f)[0] = u[0];
    fu.at(f)[1] = u[1];
  }
  GroupWord w;
  w.p = {3};
  const CocycleLogNorm c0 = cocycle_log_norm({a0}, w, fu);
  CHECK(std::abs(c0.sup_log - 3.0 * kCatLog) < 1e-12);
  CHECK(c0.invariance_residual < 1e-12);

  // affine identity-linear maps contribute exactly nothing
  const std::vector<FourierMap> trs = {
      FourierMap::translation(2, Vec{0.3, 0.1, 0}),
      FourierMap::translation(2, Vec{0.7, 0.2, 0})};
  GroupWord w2;
  w2.p = {5, -3};
  const CocycleLogNorm c1 = cocycle_log_norm(trs, w2, fu);
  CHECK(c1.sup_log == 0.0);

  // conjugated automorphism along the pulled-back unstable field
  const FourierMap phi = small_conjugator(3e-4);
  InvertOptions io;
  io.grid = 128;
  const FourierMap aprime =
      conjugated(a0, phi, invert(phi, io).inv, 128);
  FoliationField pulled(2, 32);
  for (std::size_t f = 0; f < pulled.npoints(); ++f) {
    const std::size_t gi = f / 32, gj = f % 32;
    const Vec x = {static_cast<double>(gi) / 32.0,
                   static_cast<double>(gj) / 32.0, 0};
    const Vec v = mat_apply(2, dmat_inverse(2, phi.jacobian(x)), u);
    const double nn = std::sqrt(v[0] * v[0] + v[1] * v[1]);
    pulled.at(f)[0] = v[0] / nn;
    pulled.at(f)[1] = v[1] / nn;
  }
  GroupWord w3;
  w3.p = {2};
  const CocycleLogNorm c2 = cocycle_log_norm({aprime}, w3, pulled);
  CHECK(std::abs(c2.sup_log - 2.0 * kCatLog) < 0.05);
  CHECK(c2.invariance_residual < 5e-3);

  // a field transverse to the dynamics is rejected
  FoliationField bad(2, 16);
  for (std::size_t f = 0; f < bad.npoints(); ++f) {
    bad.at(f)[0] = 1;
    bad.at(f)[1] = 0;
  }
  CHECK_THROWS_AS(cocycle_log_norm({a0}, w, bad), FoliationNotInvariant);

  GroupWord wrong;
  wrong.p = {1, 2};
  CHECK_THROWS_AS(cocycle_log_norm({a0}, wrong, fu), ConfigInvalid);
}
