#include "maqed/mode_space.hpp"

#include <gtest/gtest.h>

#include <numbers>
#include <random>

using namespace maqed;

namespace {

const double tau = 2.0 * std::numbers::pi;

struct Wave {
  std::array<int, 3> n;
  CVec3 amp;
};

FieldSample plane_waves(const BoxGeometry &g, std::array<int, 3> shape,
                        const std::vector<Wave> &waves) {
  FieldSample f(shape, g);
  for (int k = 0; k < shape[2]; ++k)
    for (int j = 0; j < shape[1]; ++j)
      for (int i = 0; i < shape[0]; ++i) {
        const Vec3 r = f.position(i, j, k);
        for (const auto &w : waves) {
          f.at(i, j, k) += w.amp * std::exp(cplx(0, g.wavevector(w.n).dot(r)));
        }
      }
  return f;
}

double max_norm(const FieldSample &f) {
  double m = 0.0;
  for (const auto &v : f.values) m = std::max(m, v.norm());
  return m;
}

std::vector<Wave> random_waves(std::mt19937_64 &rng, int count, int band) {
  std::uniform_int_distribution<int> ni(-band, band);
  std::normal_distribution<double> nd;
  std::vector<Wave> out;
  while (int(out.size()) < count) {
    Wave w{{ni(rng), ni(rng), ni(rng)}, CVec3::Zero()};
    if (w.n == std::array<int, 3>{0, 0, 0}) continue;
    for (int d = 0; d < 3; ++d) w.amp(d) = cplx(nd(rng), nd(rng));
    out.push_back(w);
  }
  return out;
}

} // namespace

TEST(EnumerateModes, CubeOfSide2Pi) {
  BoxGeometry g{tau, tau, tau, 1};
  const auto modes = enumerate_modes(g, 1.0);
  ASSERT_EQ(modes.size(), 26u);
  for (const auto &m : modes) EXPECT_NE(m.n, (std::array<int, 3>{0, 0, 0}));
  const auto it = std::find_if(modes.begin(), modes.end(), [](const WaveMode &m) {
    return m.n == std::array<int, 3>{1, 0, 0};
  });
  ASSERT_NE(it, modes.end());
  EXPECT_LE((it->k - Vec3(1, 0, 0)).norm(), 1e-15);
  EXPECT_DOUBLE_EQ(it->omega, 1.0);
  // lexicographic
  for (std::size_t i = 1; i < modes.size(); ++i) EXPECT_LT(modes[i - 1].n, modes[i].n);
}

TEST(EnumerateModes, UnitBoxWavevector) {
  const WaveMode m = make_mode(BoxGeometry{}, {1, 2, 3}, 2.0);
  EXPECT_LE((m.k - tau * Vec3(1, 2, 3)).norm(), 1e-13);
  EXPECT_EQ(m.omega, 2.0 * m.k.norm());
  try {
    make_mode(BoxGeometry{}, {0, 0, 0}, 1.0);
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), Errc::ZeroWavevector);
  }
}

TEST(EnumerateModes, CountAndTriads) {
  BoxGeometry g{1.0, 2.0, 0.7, 3};
  const auto modes = enumerate_modes(g, 1.0);
  EXPECT_EQ(modes.size(), 7u * 7u * 7u - 1u);
  for (const auto &m : modes) {
    EXPECT_LE(triad_error(m), 1e-12);
    EXPECT_LE((triad_completeness(m.v) - Tensor3::Identity()).norm(), 1e-12);
    EXPECT_LE((triad_completeness(m.s) - Tensor3::Identity()).norm(), 1e-12);
  }
}

TEST(TransverseDelta, Examples) {
  EXPECT_LE((transverse_delta(Vec3(0, 0, 1)) - Tensor3(Vec3(1, 1, 0).asDiagonal())).norm(),
            1e-15);
  Tensor3 want;
  want << 0.5, -0.5, 0, -0.5, 0.5, 0, 0, 0, 1;
  EXPECT_LE((transverse_delta(Vec3(1, 1, 0) / std::sqrt(2.0)) - want).norm(), 1e-15);
  std::mt19937_64 rng(4);
  std::normal_distribution<double> nd;
  for (int i = 0; i < 200; ++i) {
    const Vec3 k(nd(rng), nd(rng), nd(rng));
    const Tensor3 p = transverse_delta(k);
    EXPECT_LE((p * k).norm(), 1e-12 * k.norm());
    EXPECT_LE((p * p - p).norm(), 1e-12);
    EXPECT_LE(asymmetry(p), 1e-15);
  }
  EXPECT_THROW(transverse_delta(Vec3::Zero()), Error);
}

TEST(DecomposeField, ConstantIsTransverse) {
  BoxGeometry g{1.0, 1.5, 2.0, 1};
  FieldSample f({8, 8, 8}, g);
  for (auto &v : f.values) v = CVec3(1.0, -2.0, 0.5);
  const auto sp = decompose_field(f, g);
  EXPECT_LE(max_norm(sp.longitudinal), 1e-13);
}

TEST(DecomposeField, GradientIsLongitudinal) {
  BoxGeometry g{2.0, 1.0, 1.0, 1};
  FieldSample f({16, 4, 4}, g);
  for (int k = 0; k < 4; ++k)
    for (int j = 0; j < 4; ++j)
      for (int i = 0; i < 16; ++i) {
        const double x = f.position(i, j, k)(0);
        f.at(i, j, k) = CVec3(tau / g.L1 * std::cos(tau * x / g.L1), 0, 0);
      }
  const auto sp = decompose_field(f, g);
  EXPECT_LE(max_norm(sp.transverse), 1e-13);
  FieldSample diff = sp.longitudinal;
  for (std::size_t n = 0; n < f.size(); ++n) diff.values[n] -= f.values[n];
  EXPECT_LE(max_norm(diff), 1e-13);
}

TEST(DecomposeField, PolarizedPlaneWaveIsTransverse) {
  BoxGeometry g{1.0, 1.0, 1.0, 2};
  const WaveMode m = make_mode(g, {1, -2, 1}, 1.0);
  const auto f = plane_waves(g, {8, 8, 8}, {{m.n, m.e[0].cast<cplx>()}});
  const auto sp = decompose_field(f, g);
  EXPECT_LE(max_norm(sp.longitudinal), 1e-12);
}

TEST(DecomposeField, MatchesGreenConvolution) {
  // F_par = grad phi with lap phi = div F; for a plane wave
  // int e^{ik.r'} / (4 pi |r - r'|) d^3r' = e^{ik.r} / k^2, so
  // F_par = k (k . a) e^{ik.r} / k^2 for each component.
  BoxGeometry g{1.0, 0.8, 1.3, 2};
  std::mt19937_64 rng(21);
  const auto waves = random_waves(rng, 12, 3);
  const std::array<int, 3> shape{8, 8, 8};
  const auto f = plane_waves(g, shape, waves);
  std::vector<Wave> par;
  for (const auto &w : waves) {
    const Vec3 k = g.wavevector(w.n);
    // dot() conjugates the left side; k is real
    par.push_back({w.n, k.cast<cplx>() * (k.cast<cplx>().dot(w.amp)) / k.squaredNorm()});
  }
  const auto oracle = plane_waves(g, shape, par);
  const auto sp = decompose_field(f, g);
  double err = 0.0, ref = 0.0;
  for (std::size_t n = 0; n < f.size(); ++n) {
    err = std::max(err, (sp.longitudinal.values[n] - oracle.values[n]).norm());
    ref = std::max(ref, f.values[n].norm());
  }
  EXPECT_LE(err, 1e-12 * ref);
  // and the pieces are divergence- / curl-free
  for (const cplx d : spectral_divergence(sp.transverse, g)) EXPECT_LE(std::abs(d), 1e-10 * ref);
  EXPECT_LE(max_norm(spectral_curl(sp.longitudinal, g)), 1e-10 * ref);
  // sum back
  for (std::size_t n = 0; n < f.size(); ++n) {
    EXPECT_LE((sp.transverse.values[n] + sp.longitudinal.values[n] - f.values[n]).norm(),
              1e-10 * ref);
  }
}

TEST(DecomposeField, IsProjection) {
  BoxGeometry g{1.0, 1.0, 1.0, 2};
  std::mt19937_64 rng(8);
  const auto f = plane_waves(g, {8, 8, 8}, random_waves(rng, 20, 3));
  const auto once = decompose_field(f, g);
  const auto twice = decompose_field(once.transverse, g);
  double ref = max_norm(f);
  FieldSample d = twice.transverse;
  for (std::size_t n = 0; n < f.size(); ++n) d.values[n] -= once.transverse.values[n];
  EXPECT_LE(max_norm(d), 1e-12 * ref);
  EXPECT_LE(max_norm(twice.longitudinal), 1e-12 * ref);
}

TEST(DecomposeField, Parseval) {
  BoxGeometry g{1.0, 2.0, 1.0, 2};
  std::mt19937_64 rng(13);
  const auto f = plane_waves(g, {8, 8, 8}, random_waves(rng, 15, 3));
  double mean = 0.0;
  for (const auto &v : f.values) mean += v.squaredNorm();
  mean /= double(f.size());
  double sum = 0.0;
  for (const auto &c : fourier_coefficients(f)) sum += c.squaredNorm();
  EXPECT_NEAR(sum, mean, 1e-10 * mean);
}

TEST(DecomposeField, IncompatibleGrid) {
  BoxGeometry g{1.0, 1.0, 1.0, 1};
  FieldSample f({4, 4, 4}, BoxGeometry{2.0, 1.0, 1.0, 1});
  try {
    decompose_field(f, g);
    FAIL();
  } catch (const Error &e) {
    EXPECT_EQ(e.code(), Errc::IncompatibleGrid);
  }
}

TEST(SpectralCurl, ComplexPlaneWave) {
  // curl of e^{i k.r} a is i k x a e^{i k.r}
  const BoxGeometry g{1.0, 1.0, 1.0, 1};
  FieldSample f({8, 8, 8}, g);
  const Vec3 k = g.wavevector({1, 2, 0});
  const CVec3 a(cplx(0, 1), cplx(0.5, 0), cplx(0.2, -0.3));
  for (int kk = 0; kk < 8; ++kk)
    for (int j = 0; j < 8; ++j)
      for (int i = 0; i < 8; ++i) f.at(i, j, kk) = a * std::exp(cplx(0, k.dot(f.position(i, j, kk))));
  const FieldSample c = spectral_curl(f, g);
  const CVec3 want = cplx(0, 1) * cross(k.cast<cplx>(), a);
  for (int kk = 0; kk < 8; ++kk)
    for (int j = 0; j < 8; ++j)
      for (int i = 0; i < 8; ++i) {
        const cplx ph = std::exp(cplx(0, k.dot(f.position(i, j, kk))));
        ASSERT_LE((c.at(i, j, kk) - want * ph).norm(), 1e-12 * want.norm());
      }
}
