#include "maqed/medium.hpp"

#include <gtest/gtest.h>

#include <numbers>
#include <random>

using namespace maqed;

namespace {

const double pi = std::numbers::pi;

LorentzModel iso_lorentz(double wp2, double w02, double gamma) {
  return {wp2, gamma, w02 * Tensor3::Identity()};
}

Tensor3 random_spd(std::mt19937_64 &rng, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  std::normal_distribution<double> n;
  Tensor3 a;
  for (int i = 0; i < 9; ++i) a(i) = n(rng);
  Eigen::HouseholderQR<Tensor3> qr(a);
  const Tensor3 q = qr.householderQ();
  return q * Vec3(u(rng), u(rng), u(rng)).asDiagonal() * q.transpose();
}

// composite Simpson on [a, b]
template <class F> auto simpson(F &&f, double a, double b, int n) {
  if (n % 2) ++n;
  const double h = (b - a) / n;
  auto acc = f(a) + f(b);
  for (int i = 1; i < n; ++i) acc = acc + f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return acc * (h / 3.0);
}

FieldHistory constant_history(const Vec3 &v, double t0, double t1, double dt) {
  FieldHistory h;
  h.t0 = t0;
  h.dt = dt;
  const int n = int(std::llround((t1 - t0) / dt)) + 1;
  h.samples.assign(n, v);
  return h;
}

} // namespace

TEST(ChiTime, CausalForEveryModel) {
  TabulatedModel tab{{0.5, 1.0, 2.0}, {Tensor3::Identity(), Tensor3::Identity(), Tensor3::Zero()}};
  const std::vector<SusceptibilityModel> models{
      VacuumModel{}, iso_lorentz(1, 1, 0.1), RectPulseModel{Tensor3::Identity(), 0.3},
      InstantaneousModel{Tensor3::Identity()}, tab};
  for (const auto &m : models) {
    for (double t : {-1.0, -1e-12, 0.0}) EXPECT_EQ(chi_time(m, t), Tensor3::Zero());
  }
}

TEST(ChiTime, RectPulseWindow) {
  RectPulseModel m{Vec3(1, 2, 3).asDiagonal(), 0.5};
  EXPECT_EQ(chi_time(m, 0.25), Tensor3(Vec3(2, 4, 6).asDiagonal()));
  EXPECT_EQ(chi_time(m, 0.5), Tensor3::Zero());
  EXPECT_EQ(chi_time(m, 3.0), Tensor3::Zero());
}

TEST(ChiTime, LorentzMatchesInverseFourierQuadrature) {
  // chi(t) = (2/pi) int_0^inf Im chi(w) sin(w t) dw; Im chi ~ w^-3 so the
  // truncated trapezoid converges
  const double gamma = 0.2;
  const auto m = iso_lorentz(1.3, 1.0, gamma);
  auto im = [&](double w) {
    return 1.3 * 2 * gamma * w / ((1 - w * w) * (1 - w * w) + 4 * gamma * gamma * w * w);
  };
  for (double t : {0.4, 1.7, 5.0}) {
    const double oracle =
        2.0 / pi * simpson([&](double w) { return im(w) * std::sin(w * t); }, 0.0, 400.0, 400000);
    const double w1 = std::sqrt(1.0 - gamma * gamma);
    const double closed = 1.3 * std::exp(-gamma * t) * std::sin(w1 * t) / w1;
    EXPECT_NEAR(closed, oracle, 2e-5) << t;
    EXPECT_LE((chi_time(m, t) - closed * Tensor3::Identity()).norm(), 1e-13) << t;
  }
}

TEST(ChiTime, OverdampedAndCritical) {
  for (double gamma : {1.0, 3.0}) {
    const auto m = iso_lorentz(1.0, 1.0, gamma);
    // chi'' + 2 gamma chi' + chi = 0, chi(0) = 0, chi'(0) = wp2, checked by
    // central differences
    const double t = 0.8, h = 1e-4;
    const double c0 = chi_time(m, t)(0, 0);
    const double cp = chi_time(m, t + h)(0, 0), cm = chi_time(m, t - h)(0, 0);
    const double res = (cp - 2 * c0 + cm) / (h * h) + 2 * gamma * (cp - cm) / (2 * h) + c0;
    EXPECT_NEAR(res, 0.0, 1e-5) << gamma;
    EXPECT_NEAR(chi_time(m, 1e-7)(0, 0) / 1e-7, 1.0, 1e-5);
  }
}

TEST(ChiFreq, LorentzStaticAndResonance) {
  std::mt19937_64 rng(1);
  const Tensor3 K = random_spd(rng, 0.5, 3.0);
  LorentzModel m{2.0, 0.3, K};
  const CTensor3 c0 = chi_freq(m, 0.0);
  EXPECT_LE((c0.real() - 2.0 * K.inverse()).norm(), 1e-12);
  EXPECT_LE(c0.imag().norm(), 1e-15);

  const CTensor3 r = chi_freq(iso_lorentz(1, 1, 0.1), 1.0);
  // oracle: wp2 / (w0^2 - w^2 - 2 i gamma w)
  const cplx want = 1.0 / cplx(0.0, -0.2);
  EXPECT_NEAR(want.imag(), 5.0, 1e-15);
  EXPECT_LE((r - want * CTensor3::Identity()).norm(), 1e-13);
}

TEST(ChiFreq, HermitianSymmetry) {
  std::mt19937_64 rng(2);
  LorentzModel m{1.5, 0.2, random_spd(rng, 0.2, 2.0)};
  for (double w : {0.3, 1.1, 4.0}) {
    EXPECT_LE((chi_freq(m, -w) - chi_freq(m, w).conjugate()).norm(), 1e-15);
  }
}

TEST(ChiFreq, UndampedResonanceIsSingular) {
  try {
    chi_freq(iso_lorentz(1, 4, 0.0), 2.0);
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), Errc::SingularResonance);
  }
  EXPECT_NO_THROW(chi_freq(iso_lorentz(1, 4, 0.0), 1.0));
}

TEST(ChiFreq, RectPulseMatchesQuadrature) {
  const Tensor3 chi0 = Vec3(1.0, 0.5, 2.0).asDiagonal();
  const double delta = 0.7;
  RectPulseModel m{chi0, delta};
  for (double w : {0.0, 0.2, 3.0, 2 * pi / delta, 25.0}) {
    const cplx oracle = simpson(
        [&](double t) { return std::exp(cplx(0, w * t)) / delta; }, 0.0, delta, 20000);
    EXPECT_LE((chi_freq(m, w) - oracle * chi0.cast<cplx>()).norm(), 1e-12) << w;
  }
}

TEST(ChiLaplace, LorentzMatchesQuadrature) {
  const auto m = iso_lorentz(1.0, 2.0, 0.3);
  for (cplx s : {cplx(0.5, 0.0), cplx(1.0, 2.0), cplx(0.2, -0.7)}) {
    const cplx oracle = simpson(
        [&](double t) { return chi_time(m, t)(0, 0) * std::exp(-s * t); }, 1e-300, 80.0, 200000);
    EXPECT_LE(std::abs(chi_laplace(m, s)(0, 0) - oracle), 1e-9) << s;
  }
}

TEST(ChiLaplace, RectPulseMatchesQuadrature) {
  RectPulseModel m{Tensor3::Identity() * 1.5, 0.4};
  for (cplx s : {cplx(1e-5, 0), cplx(0.5, 3.0), cplx(2.0, -1.0)}) {
    const cplx oracle =
        simpson([&](double t) { return 1.5 / 0.4 * std::exp(-s * t); }, 0.0, 0.4, 20000);
    EXPECT_LE(std::abs(chi_laplace(m, s)(1, 1) - oracle), 1e-12) << s;
  }
}

TEST(ChiLaplace, RealOnRealAxisAndContinuesToFreq) {
  std::mt19937_64 rng(3);
  LorentzModel lor{1.0, 0.15, random_spd(rng, 0.5, 2.0)};
  RectPulseModel rp{random_spd(rng, 0.1, 1.0), 0.9};
  for (const SusceptibilityModel &m : {SusceptibilityModel(lor), SusceptibilityModel(rp)}) {
    EXPECT_LE(chi_laplace(m, 0.8).imag().norm(), 1e-15);
    for (double w : {0.3, 1.0, 2.2}) {
      const CTensor3 a = chi_laplace(m, cplx(1e-12, -w));
      EXPECT_LE((a - chi_freq(m, w)).norm(), 1e-8 * std::max(1.0, a.norm()));
    }
  }
}

TEST(RationalForm, LorentzTermsReassemble) {
  std::mt19937_64 rng(4);
  LorentzModel m{1.7, 0.25, random_spd(rng, 0.5, 2.0)};
  const auto r = rational_form(m);
  ASSERT_TRUE(r.has_value());
  for (cplx s : {cplx(0.3, 1.0), cplx(2.0, 0.0)}) {
    EXPECT_LE(((*r)(s) - chi_laplace(m, s)).norm(), 1e-13);
  }
  // degenerate K merges into one term
  EXPECT_EQ(rational_form(iso_lorentz(1, 1, 0.1))->terms.size(), 1u);
  EXPECT_FALSE(rational_form(RectPulseModel{}).has_value());
}

TEST(Passivity, LorentzPsdForPositiveGamma) {
  std::mt19937_64 rng(5);
  const auto grid = log_grid(1e-3, 1e3, 2048);
  for (int trial = 0; trial < 5; ++trial) {
    LorentzModel m{1.0, 0.01 + 0.2 * trial, random_spd(rng, 0.1, 5.0)};
    for (double w : grid) {
      const double lmax = chi_freq(m, w).imag().norm();
      EXPECT_GE(passivity_margin(m, w), -1e-12 * lmax);
    }
    EXPECT_TRUE(nonpassive_windows(m, grid).empty());
  }
}

TEST(Passivity, RectPulseWindows) {
  const double delta = 0.5;
  const auto grid = linear_grid(0.01, 40.0, 4000);
  // psd chi0: passive, Im chi only touches zero
  EXPECT_TRUE(nonpassive_windows(RectPulseModel{Vec3(1, 2, 3).asDiagonal(), delta}, grid).empty());
  // indefinite chi0: the negative direction fails between consecutive zeros
  RectPulseModel bad{Vec3(1.0, -0.5, 1.0).asDiagonal(), delta};
  const auto win = nonpassive_windows(bad, grid);
  const double period = 2 * pi / delta;
  ASSERT_EQ(win.size(), std::size_t(std::ceil(40.0 / period)));
  for (std::size_t m = 0; m < win.size(); ++m) {
    EXPECT_NEAR(win[m].lo, std::max(0.01, m * period), 1e-12);
    EXPECT_NEAR(win[m].hi, std::min(40.0, (m + 1) * period), 1e-12);
    // sign analysis at the window centre
    const double mid = 0.5 * (win[m].lo + win[m].hi);
    EXPECT_LT(passivity_margin(bad, mid), 0.0);
  }
}

TEST(KramersKronig, TabulatedLorentzRealPart) {
  const auto grid = log_grid(1e-3, 1e3, 2048);
  for (double gamma : {0.05, 0.1, 0.5}) {
    const auto lor = iso_lorentz(1.0, 1.0, gamma);
    TabulatedModel tab;
    tab.omega = grid;
    for (double w : grid) tab.im_chi.push_back(chi_freq(lor, w).imag());
    for (double w : log_grid(0.1, 10.0, 61)) {
      const CTensor3 want = chi_freq(lor, w);
      const Tensor3 got = chi_freq(tab, w).real();
      EXPECT_LE((got - want.real()).norm(), 1e-2 * want.norm()) << gamma << " " << w;
    }
  }
}

TEST(Response, VacuumGivesNoiseOnly) {
  const auto k = PhysicalConstants::natural();
  FieldHistory e = constant_history(Vec3(1, 2, 3), -2.0, 2.0, 0.01);
  FieldHistory noise = constant_history(Vec3(0.1, -0.2, 0.3), -2.0, 2.0, 0.01);
  EXPECT_LE((polarization_response(VacuumModel{}, &noise, e, 1.5, k) - Vec3(0.1, -0.2, 0.3)).norm(),
            1e-15);
  EXPECT_LE((magnetization_response(VacuumModel{}, &noise, e, -1.5, k) - Vec3(0.1, -0.2, 0.3)).norm(),
            1e-15);
  EXPECT_EQ(polarization_response(VacuumModel{}, nullptr, e, 1.5, k), Vec3::Zero());
}

TEST(Response, RectPulseConstantField) {
  const auto k = PhysicalConstants::from(1.0, 2.5, 0.4);
  const Tensor3 chi0 = Vec3(1.0, 2.0, 0.5).asDiagonal();
  RectPulseModel m{chi0, 0.3};
  const Vec3 e0(1.0, -1.0, 2.0);
  // dt not commensurate with delta
  FieldHistory e = constant_history(e0, -3.0, 3.0, 0.007);
  for (double t : {0.5, 2.0, -1.0}) {
    EXPECT_LE((polarization_response(m, nullptr, e, t, k) - k.eps0 * chi0 * e0).norm(), 1e-12)
        << t;
    EXPECT_LE((magnetization_response(m, nullptr, e, t, k) - chi0 * e0 / k.mu0).norm(), 1e-12)
        << t;
  }
  // inside the window only a fraction t / delta has built up
  EXPECT_LE((polarization_response(m, nullptr, e, 0.15, k) - 0.5 * k.eps0 * chi0 * e0).norm(),
            1e-12);
}

TEST(Response, ShortPulseLimit) {
  const auto k = PhysicalConstants::natural();
  const Tensor3 chi0 = Vec3(0.5, 1.0, 2.0).asDiagonal();
  const double t = 2.0, delta = 1e-4 * t;
  RectPulseModel m{chi0, delta};
  FieldHistory e;
  e.t0 = -3.0;
  e.dt = delta / 20.0;
  const int n = int(6.0 / e.dt) + 1;
  for (int j = 0; j < n; ++j) {
    const double tt = e.t0 + j * e.dt;
    e.samples.push_back(Vec3(std::cos(tt), std::sin(2 * tt), 1.0 + 0.1 * tt));
  }
  for (double tt : {t, -t}) {
    const Vec3 want = chi0 * e(tt);
    EXPECT_LE((polarization_response(m, nullptr, e, tt, k) - want).norm(), 1e-3 * want.norm());
    EXPECT_LE((magnetization_response(m, nullptr, e, tt, k) - want).norm(), 1e-3 * want.norm());
  }
}

TEST(Response, BackwardBranchUsesMirroredField) {
  // E(t') = (t', 0, 0): forward and backward integrals differ only by the
  // sign of the field argument
  const auto k = PhysicalConstants::natural();
  const auto m = iso_lorentz(1.0, 1.0, 0.2);
  FieldHistory e;
  e.t0 = -4.0;
  e.dt = 1e-3;
  for (int j = 0; j <= 8000; ++j) e.samples.push_back(Vec3(e.t0 + j * e.dt, 0, 0));
  const Vec3 fwd = polarization_response(m, nullptr, e, 3.0, k);
  const Vec3 bwd = polarization_response(m, nullptr, e, -3.0, k);
  EXPECT_LE((fwd + bwd).norm(), 1e-12);
  // oracle: int_0^T chi(T - u) u du
  const double oracle = simpson([&](double u) { return chi_time(m, 3.0 - u)(0, 0) * u; },
                                0.0, 3.0, 20000);
  EXPECT_NEAR(fwd(0), oracle, 1e-6);
}

TEST(Response, ImpulseReproducesKernel) {
  // a unit-area triangle of width 2 dt at t' = 0 returns chi(T) dt-accurately
  const auto k = PhysicalConstants::natural();
  const auto m = iso_lorentz(1.0, 2.0, 0.1);
  FieldHistory e;
  e.t0 = 0.0;
  e.dt = 1e-3;
  e.samples.assign(6001, Vec3::Zero());
  e.samples[0] = Vec3(2.0 / e.dt, 0, 0); // half-weight endpoint
  for (double T : {0.5, 1.0, 4.0}) {
    const double got = polarization_response(m, nullptr, e, T, k)(0);
    EXPECT_NEAR(got, chi_time(m, T)(0, 0), 2e-3) << T;
  }
}

TEST(Response, InsufficientHistory) {
  const auto k = PhysicalConstants::natural();
  FieldHistory e = constant_history(Vec3(1, 0, 0), 0.0, 1.0, 0.01);
  try {
    polarization_response(iso_lorentz(1, 1, 0.1), nullptr, e, 2.0, k);
    FAIL();
  } catch (const Error &err) {
    EXPECT_EQ(err.code(), Errc::InsufficientHistory);
  }
  EXPECT_THROW(polarization_response(iso_lorentz(1, 1, 0.1), nullptr, e, -0.5, k), Error);
}

TEST(MaterialMap, CellLookup) {
  MaterialMap map;
  map.extent = {2.0, 1.0, 1.0};
  map.cells = {2, 1, 1};
  map.models = {RectPulseModel{Tensor3::Identity(), 1.0}, VacuumModel{}};
  EXPECT_FALSE(map.is_homogeneous());
  EXPECT_EQ(chi_time(map, Vec3(0.5, 0.3, 0.3), 0.5), Tensor3::Identity());
  EXPECT_EQ(chi_time(map, Vec3(1.5, 0.3, 0.3), 0.5), Tensor3::Zero());
  // periodic wrap
  EXPECT_EQ(chi_time(map, Vec3(-0.5, 0.3, 0.3), 0.5), Tensor3::Zero());
  EXPECT_TRUE(MaterialMap::homogeneous(VacuumModel{}).is_homogeneous());
}

TEST(Validate, RejectsBadParameters) {
  EXPECT_THROW(validate(LorentzModel{1.0, -0.1, Tensor3::Identity()}), Error);
  EXPECT_THROW(validate(LorentzModel{1.0, 0.1, -Tensor3::Identity()}), Error);
  EXPECT_THROW(validate(RectPulseModel{Tensor3::Identity(), 0.0}), Error);
  EXPECT_THROW(validate(TabulatedModel{{1.0}, {Tensor3::Zero()}}), Error);
  EXPECT_NO_THROW(validate(iso_lorentz(1, 1, 0.1)));
}
