#include "maqed/coupling.hpp"

#include <gtest/gtest.h>

#include <numbers>
#include <random>

using namespace maqed;

namespace {

const double pi = std::numbers::pi;

Tensor3 random_orthogonal(std::mt19937_64 &rng) {
  std::normal_distribution<double> n;
  Tensor3 a;
  for (int i = 0; i < 9; ++i) a(i) = n(rng);
  Eigen::HouseholderQR<Tensor3> qr(a);
  return qr.householderQ();
}

Tensor3 spd_with_spectrum(std::mt19937_64 &rng, const Vec3 &eig) {
  const Tensor3 q = random_orthogonal(rng);
  return q * eig.asDiagonal() * q.transpose();
}

} // namespace

TEST(FfT, LosslessIsZero) {
  const auto k = PhysicalConstants::natural();
  for (double w : {0.1, 1.0, 10.0}) {
    EXPECT_EQ(ff_t_from_chi(InstantaneousModel{Tensor3::Identity()}, w, k), Tensor3::Zero());
    EXPECT_EQ(gg_t_from_chi(VacuumModel{}, w, k), Tensor3::Zero());
  }
}

TEST(FfT, ZeroFrequencyBranch) {
  const auto k = PhysicalConstants::si();
  LorentzModel m{1e30, 1e13, Tensor3::Identity() * 1e30};
  EXPECT_EQ(ff_t_from_chi(m, 0.0, k), Tensor3::Zero());
  EXPECT_EQ(gg_t_from_chi(m, 0.0, k), Tensor3::Zero());
  EXPECT_THROW(ff_t_from_chi(m, -1.0, k), Error);
}

TEST(FfT, IsotropicResonance) {
  const auto k = PhysicalConstants::natural();
  LorentzModel m{1.0, 0.1, Tensor3::Identity()};
  // Im chi = 5 at w = 1, then hbar c^3 eps0 / (4 pi^2 w^2) = 1 / (4 pi^2)
  const Tensor3 want = 5.0 / (4 * pi * pi) * Tensor3::Identity();
  EXPECT_LE((ff_t_from_chi(m, 1.0, k) - want).norm(), 1e-14);
}

TEST(FfT, MatchesClosedForm) {
  std::mt19937_64 rng(17);
  for (const auto &k : {PhysicalConstants::natural(), PhysicalConstants::from(0.7, 1.9, 0.4)}) {
    LorentzModel m{2.3, 0.15, spd_with_spectrum(rng, Vec3(0.4, 1.0, 2.7))};
    double worst = 0.0;
    for (double w : GridSpec{}.build()) {
      const Tensor3 a = ff_t_from_chi(m, w, k);
      const Tensor3 b = lorentz_spectral_density(m, w, k);
      worst = std::max(worst, relative_frobenius(a, b));
    }
    EXPECT_LE(worst, 1e-10);
  }
}

TEST(FfT, DecaysFasterThanInverseSquare) {
  const auto k = PhysicalConstants::natural();
  LorentzModel m{1.0, 0.2, Tensor3::Identity()};
  double prev = 1e300;
  for (double w : {1e2, 1e3, 1e4}) {
    const double v = w * w * ff_t_from_chi(m, w, k).norm();
    EXPECT_LT(v, 0.05 * prev);
    prev = v;
  }
}

TEST(FfT, NonPassiveRaised) {
  const auto k = PhysicalConstants::natural();
  RectPulseModel bad{Vec3(1.0, -0.5, 1.0).asDiagonal(), 1.0};
  try {
    ff_t_from_chi(bad, 1.0, k);
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), Errc::NonPassive);
  }
}

TEST(GgT, RectPulsePrefactor) {
  // the printed factor sin^2(w d/2) / (w d/2) against a quadrature of
  // int_0^d (1/d) sin(w t) dt
  const auto k = PhysicalConstants::from(1.0, 1.3, 0.6);
  const Tensor3 chi0 = Vec3(0.4, 1.0, 2.0).asDiagonal();
  const double d = 0.8;
  RectPulseModel m{chi0, d};
  for (double w : {0.05, 1.0, 2 * pi / d, 9.3, 40.0}) {
    const int n = 20000;
    const double h = d / n;
    double quad = 0.0;
    for (int i = 0; i <= n; ++i) {
      const double wt = (i == 0 || i == n) ? 1.0 : (i % 2 ? 4.0 : 2.0);
      quad += wt * std::sin(w * i * h) / d;
    }
    quad *= h / 3.0;
    const double x = 0.5 * w * d;
    const double printed = std::sin(x) * std::sin(x) / x;
    EXPECT_NEAR(printed, quad, 1e-12) << w;
    const double pre = k.hbar * k.c * k.c * k.c / (4 * pi * pi * k.mu0 * w * w);
    EXPECT_LE((gg_t_from_chi(m, w, k) - pre * printed * chi0).norm(),
              1e-13 * std::max(1.0, (pre * chi0).norm()))
        << w;
  }
}

TEST(GgT, Linearity) {
  const auto k = PhysicalConstants::natural();
  const Tensor3 chi0 = Vec3(0.4, 1.0, 2.0).asDiagonal();
  for (double w : {0.3, 2.0, 11.0}) {
    const Tensor3 a = gg_t_from_chi(RectPulseModel{chi0, 0.5}, w, k);
    const Tensor3 b = gg_t_from_chi(RectPulseModel{2.0 * chi0, 0.5}, w, k);
    EXPECT_LE((b - 2.0 * a).norm(), 1e-15 * b.norm());
  }
}

TEST(ChiFromCoupling, ZeroSpectrum) {
  const auto k = PhysicalConstants::natural();
  const auto s = build_spectrum(VacuumModel{}, VacuumModel{}, GridSpec{}.build(), k);
  EXPECT_EQ(chi_from_coupling(s, 1.0), Tensor3::Zero());
  EXPECT_EQ(chi_from_coupling(s, -1.0), Tensor3::Zero());
}

TEST(ChiFromCoupling, LorentzRoundTrip) {
  for (const auto &k : {PhysicalConstants::natural(), PhysicalConstants::from(2.0, 0.5, 3.0)}) {
    LorentzModel m{1.0, 0.3, Tensor3::Identity()};
    const auto s = build_spectrum(m, VacuumModel{}, GridSpec{}.build(), k);
    ChiReconstructor chi(s, Field::Electric);
    double num = 0.0, den = 0.0;
    for (double t : linear_grid(0.02, 20.0, 1000)) {
      const Tensor3 a = chi(t), b = chi_time(m, t);
      num += (a - b).squaredNorm();
      den += b.squaredNorm();
    }
    EXPECT_LE(std::sqrt(num / den), 1e-3);
  }
}

TEST(ChiFromCoupling, MagneticRoundTrip) {
  const auto k = PhysicalConstants::from(1.0, 1.0, 2.0);
  LorentzModel m{0.5, 0.2, Vec3(0.5, 1.0, 2.0).asDiagonal()};
  const auto s = build_spectrum(VacuumModel{}, m, GridSpec{}.build(), k);
  ChiReconstructor chi(s, Field::Magnetic);
  for (double t : {0.5, 3.0, 9.0}) {
    EXPECT_LE((chi(t) - chi_time(m, t)).norm(), 1e-3 * 0.5) << t;
  }
}

TEST(ChiFromCoupling, RectPulseCesaro) {
  const auto k = PhysicalConstants::natural();
  RectPulseModel m{Tensor3::Identity(), 1.0};
  const auto s = build_spectrum(m, VacuumModel{}, GridSpec{}.build(), k);
  const auto r = ChiReconstructor(s, Field::Electric).evaluate(0.5);
  EXPECT_TRUE(r.cesaro);
  EXPECT_LE((r.value - Tensor3::Identity()).cwiseAbs().maxCoeff(), 1e-2);
}

TEST(ChiFromCoupling, TailTruncation) {
  const auto k = PhysicalConstants::natural();
  LorentzModel m{1.0, 0.3, Tensor3::Identity()};
  // grid stops right at the resonance
  const auto s = build_spectrum(m, VacuumModel{}, log_grid(1e-2, 1.0, 200), k);
  SineTransformOptions opt;
  opt.cesaro = CesaroMode::Off;
  try {
    ChiReconstructor(s, Field::Electric, opt)(2.0);
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), Errc::TailTruncation);
  }
}

TEST(Factorize, DiagonalAndGauges) {
  const auto k = PhysicalConstants::natural();
  CouplingSpectrum s;
  s.consts = k;
  s.omega = {1.0, 2.0};
  s.ffT = {Vec3(4, 9, 0).asDiagonal(), Vec3(1, 0.25, 16).asDiagonal()};
  s.ggT = {Tensor3::Zero(), Tensor3::Identity()};
  const auto f = factorize_spectrum(s);
  EXPECT_LE((f.factor_f[0] - Tensor3(Vec3(2, 3, 0).asDiagonal())).norm(), 1e-15);
  EXPECT_LE((f.factor_f[1] - Tensor3(Vec3(1, 0.5, 4).asDiagonal())).norm(), 1e-14 * 4);

  std::mt19937_64 rng(3);
  const auto a = factorize_spectrum(s, random_orthogonal(rng));
  const auto b = factorize_spectrum(s, random_orthogonal(rng));
  for (std::size_t i = 0; i < s.size(); ++i) {
    EXPECT_LE(relative_frobenius(a.factor_f[i] * a.factor_f[i].transpose(),
                                 b.factor_f[i] * b.factor_f[i].transpose()),
              1e-12);
    EXPECT_LE(relative_frobenius(a.factor_f[i] * a.factor_f[i].transpose(), s.ffT[i]), 1e-12);
  }
  EXPECT_THROW(factorize_spectrum(s, Tensor3(2.0 * Tensor3::Identity())), Error);
}

TEST(Factorize, LorentzProductsReproduce) {
  std::mt19937_64 rng(23);
  const auto k = PhysicalConstants::natural();
  LorentzModel e{1.0, 0.1, spd_with_spectrum(rng, Vec3(0.5, 1.0, 2.0))};
  LorentzModel m{0.3, 0.2, spd_with_spectrum(rng, Vec3(1.0, 1.5, 3.0))};
  const auto s = factorize_spectrum(build_spectrum(e, m, GridSpec{}.build(), k));
  for (std::size_t i = 0; i < s.size(); i += 7) {
    EXPECT_LE(relative_frobenius(s.factor_f[i] * s.factor_f[i].transpose(), s.ffT[i]), 1e-10);
    EXPECT_LE(relative_frobenius(s.factor_g[i] * s.factor_g[i].transpose(), s.ggT[i]), 1e-10);
  }
}

TEST(ResonanceWeights, NarrowLineArea) {
  // area of the line in the density: plasma hbar c^3 eps0 / (8 pi w^3) R R^t
  std::mt19937_64 rng(31);
  const auto k = PhysicalConstants::natural();
  const double w0 = 1.0;
  LorentzModel m{1.0, 1e-3 * w0, spd_with_spectrum(rng, Vec3(0.6, 1.0, 1.7))};
  for (const auto &r : lorentz_resonance_weights(m, k)) {
    const Tensor3 area =
        spectral_window_integral(m, r.omega - 0.05 * w0, r.omega + 0.05 * w0, k);
    EXPECT_LE(relative_frobenius(area, r.lorentzian), 2e-2) << r.omega;
    // the window holds the line, the projector fixes its direction
    EXPECT_LE(relative_frobenius(r.projector * area * r.projector, area), 1e-3);
  }
}
