#include "maqed/laplace.hpp"

#include <gtest/gtest.h>

#include <functional>
#include <numbers>

using namespace maqed;

namespace {

Polynomial P(std::vector<cplx> c) { return Polynomial(std::move(c)); }

struct Pair {
  const char *name;
  RationalFunction F;
  std::function<double(double)> f;
  double t;
};

std::vector<Pair> analytic_set() {
  const double pi = std::numbers::pi;
  std::vector<Pair> v;
  v.push_back({"exp", {P({1}), P({2, 1})}, [](double t) { return std::exp(-2 * t); }, 1.0});
  v.push_back({"cos", {P({0, 1}), P({1, 0, 1})}, [](double t) { return std::cos(t); }, pi});
  v.push_back({"ramp", {P({1}), P({0, 0, 1})}, [](double t) { return t; }, 3.5});
  v.push_back({"sin", {P({1}), P({1, 0, 1})}, [](double t) { return std::sin(t); }, 2.0});
  v.push_back({"triple", {P({1}), P({1}) * P({1, 1}).pow(3)},
               [](double t) { return 0.5 * t * t * std::exp(-t); }, 2.0});
  v.push_back({"damped_sin", {P({5}), P({0.01 + 25, 0.2, 1})},
               [](double t) { return std::exp(-0.1 * t) * std::sin(5 * t); }, 7.3});
  v.push_back({"two_exp", {P({1}), P({1, 1}) * P({2, 1})},
               [](double t) { return std::exp(-t) - std::exp(-2 * t); }, 0.7});
  v.push_back({"resonant", {P({0, 1}), P({9, 0, 1}).pow(2)},
               [](double t) { return t * std::sin(3 * t) / 6.0; }, 4.1});
  v.push_back({"ramp_exp", {P({1}), P({0, 0, 1}) * P({1, 1})},
               [](double t) { return t - 1 + std::exp(-t); }, 2.5});
  v.push_back({"fast_cos", {P({1, 1}), P({101, 2, 1})},
               [](double t) { return std::exp(-t) * std::cos(10 * t); }, 1.3});
  v.push_back({"double_sin", {P({1}), P({1, 0, 1}).pow(2)},
               [](double t) { return 0.5 * (std::sin(t) - t * std::cos(t)); }, 10.0});
  v.push_back({"growing", {P({1}), P({-0.5, 1})},
               [](double t) { return std::exp(0.5 * t); }, 2.0});
  v.push_back({"mixed", {P({3, 0, 1}), P({0, 1}) * P({4, 0, 1})},
               // (s^2+3)/(s(s^2+4)) = 3/(4s) + s/(4(s^2+4))
               [](double t) { return 0.75 + 0.25 * std::cos(2 * t); }, 1.1});
  return v;
}

double rel(cplx got, double want) { return std::abs(got - want) / std::abs(want); }

} // namespace

TEST(Polynomial, EvaluateAndTaylor) {
  const Polynomial p = P({1, -3, 0, 2});
  EXPECT_NEAR(std::abs(p(2.0) - cplx(11.0)), 0.0, 1e-14);
  const auto sh = p.taylor_at(1.0);
  // p(1+h) = 0 + 3h + 6h^2 + 2h^3
  EXPECT_NEAR(std::abs(sh[0]), 0.0, 1e-14);
  EXPECT_NEAR(std::abs(sh[1] - 3.0), 0.0, 1e-14);
  EXPECT_NEAR(std::abs(sh[2] - 6.0), 0.0, 1e-14);
  EXPECT_NEAR(std::abs(sh[3] - 2.0), 0.0, 1e-14);
}

TEST(Polynomial, RootsAndClusters) {
  // (s - 1)^3 (s + 2)
  const Polynomial p = P({-1, 1}).pow(3) * P({2, 1});
  const auto roots = polynomial_roots(p);
  ASSERT_EQ(roots.size(), 4u);
  auto cl = cluster_roots(roots, 1e-5);
  ASSERT_EQ(cl.size(), 2u);
  refine_clusters(p, cl);
  for (const auto &c : cl) {
    if (c.multiplicity == 3) EXPECT_LE(std::abs(c.center - 1.0), 1e-8);
    else EXPECT_LE(std::abs(c.center + 2.0), 1e-12);
  }
}

TEST(InverseLaplace, TextbookPairs) {
  EXPECT_NEAR(inverse_laplace({P({1}), P({2, 1})}, 1.0, LaplaceMethod::Residue).real(),
              std::exp(-2.0), 1e-15);
  EXPECT_NEAR(inverse_laplace({P({0, 1}), P({1, 0, 1})}, std::numbers::pi,
                              LaplaceMethod::Residue).real(),
              -1.0, 1e-14);
  EXPECT_NEAR(inverse_laplace({P({1}), P({0, 0, 1})}, 3.5, LaplaceMethod::Residue).real(),
              3.5, 1e-14);
}

TEST(InverseLaplace, AnalyticSetBothPaths) {
  const auto set = analytic_set();
  ASSERT_GE(set.size(), 10u);
  for (const auto &p : set) {
    const double want = p.f(p.t);
    const cplx res = inverse_laplace(p.F, p.t, LaplaceMethod::Residue);
    const cplx tal = inverse_laplace(p.F, p.t, LaplaceMethod::Talbot);
    EXPECT_LE(rel(res, want), 1e-8) << p.name;
    EXPECT_LE(rel(tal, want), 1e-8) << p.name;
    EXPECT_LE(std::abs(res.imag()), 1e-10 * std::abs(want)) << p.name;
  }
}

TEST(InverseLaplace, ResidueValidForNegativeTime) {
  // the expansion is an entire function of t; 1/(s^2+1) -> sin t everywhere
  const auto ex = residue_expansion({P({1}), P({1, 0, 1})});
  EXPECT_NEAR(ex(-0.7).real(), std::sin(-0.7), 1e-14);
}

TEST(InverseLaplace, Errors) {
  try {
    inverse_laplace({P({0, 0, 1}), P({1, 1})}, 1.0, LaplaceMethod::Residue);
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), Errc::DegreeMismatch);
  }
  try {
    talbot_inverse_scalar([](cplx) { return cplx(NAN, 0); }, 1.0, {});
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), Errc::PoleOnContour);
  }
  EXPECT_THROW(talbot_inverse_scalar([](cplx s) { return 1.0 / s; }, 0.0, {}), Error);
  TalbotOptions tight;
  tight.max_imag = 1e6;
  try {
    talbot_inverse_scalar([](cplx s) { return 1.0 / (s * s + 1e12); }, 1.0, tight);
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), Errc::ContourResolution);
  }
}

TEST(MatrixResidues, MatchesScalarPerEntry) {
  // diag(1/(s+1)^2, s/(s^2+4), 1/(s(s+3)))
  auto F = [](cplx s) {
    CTensor3 m = CTensor3::Zero();
    m(0, 0) = 1.0 / ((s + 1.0) * (s + 1.0));
    m(1, 1) = s / (s * s + 4.0);
    m(2, 2) = 1.0 / (s * (s + 3.0));
    m(0, 2) = 1.0 / (s + 1.0) - 1.0 / (s + 3.0);
    return m;
  };
  const std::vector<cplx> cand{-1.0, -1.0, cplx(0, 2), cplx(0, -2), 0.0, -3.0};
  const auto ex = residue_expansion(F, cand, CTensor3(CTensor3::Zero()));
  for (const double t : {0.0, 0.4, 2.0, 6.5}) {
    const CTensor3 got = ex(t);
    EXPECT_NEAR(got(0, 0).real(), t * std::exp(-t), 1e-12);
    EXPECT_NEAR(got(1, 1).real(), std::cos(2 * t), 1e-12);
    EXPECT_NEAR(got(2, 2).real(), (1 - std::exp(-3 * t)) / 3.0, 1e-12);
    EXPECT_NEAR(got(0, 2).real(), std::exp(-t) - std::exp(-3 * t), 1e-12);
    EXPECT_LE(std::abs(got(1, 0)), 1e-13);
  }
  // spurious candidate contributes nothing
  std::vector<cplx> extra = cand;
  extra.push_back(cplx(-5.0, 1.0));
  const auto ex2 = residue_expansion(F, extra, CTensor3(CTensor3::Zero()));
  EXPECT_LE((ex2(1.3) - ex(1.3)).norm(), 1e-12);
}

TEST(Talbot, MatrixValuedAgreesWithResidue) {
  auto F = [](cplx s) {
    CTensor3 m = CTensor3::Zero();
    m(0, 0) = 1.0 / (s * s + 0.4 * s + 36.04); // e^-0.2t sin 6t / 6
    m(1, 2) = s / ((s + 0.5) * (s + 0.5));
    return m;
  };
  TalbotOptions opt;
  opt.max_imag = 6.0;
  const std::vector<cplx> cand{cplx(-0.2, 6), cplx(-0.2, -6), -0.5, -0.5};
  const auto ex = residue_expansion(F, cand, CTensor3(CTensor3::Zero()));
  for (const double t : {0.3, 1.0, 5.0, 20.0}) {
    const CTensor3 a = talbot_inverse(F, t, opt, CTensor3(CTensor3::Zero()));
    const CTensor3 b = ex(t);
    EXPECT_LE((a - b).norm(), 1e-9 * std::max(1.0, b.norm())) << t;
  }
}
