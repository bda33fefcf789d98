#pragma once

// Periodic-box plane-wave modes, their polarization triads, and the
// transverse/longitudinal split of sampled vector fields.

#include "maqed/error.hpp"
#include "maqed/tensor.hpp"

#include <unsupported/Eigen/FFT>

#include <array>
#include <cmath>
#include <numbers>
#include <sstream>
#include <vector>

namespace maqed {

struct BoxGeometry {
  double L1 = 1.0, L2 = 1.0, L3 = 1.0;
  int n_max = 1;

  double volume() const { return L1 * L2 * L3; }
  void validate() const {
    if (!(L1 > 0) || !(L2 > 0) || !(L3 > 0)) {
      throw Error(Errc::InvalidArgument, "box lengths must be positive");
    }
    if (n_max < 1) throw Error(Errc::InvalidArgument, "n_max must be >= 1");
  }
  Vec3 wavevector(const std::array<int, 3> &n) const {
    const double tp = 2.0 * std::numbers::pi;
    return {tp * n[0] / L1, tp * n[1] / L2, tp * n[2] / L3};
  }
};

struct WaveMode {
  std::array<int, 3> n{};
  Vec3 k = Vec3::Zero();
  double omega = 0.0;
  Vec3 khat = Vec3::Zero();
  std::array<Vec3, 2> e;
  std::array<Vec3, 3> v; // e1, e2, khat
  std::array<Vec3, 3> s; // khat x e1, khat x e2, khat
};

/// Orthonormal (e1, e2) transverse to khat: e1 from the coordinate axis
/// least aligned with khat (lowest index on ties), e2 = khat x e1.
inline std::array<Vec3, 2> polarization_pair(const Vec3 &khat) {
  int axis = 0;
  for (int i = 1; i < 3; ++i) {
    if (std::abs(khat(i)) < std::abs(khat(axis))) axis = i;
  }
  Vec3 a = Vec3::Unit(axis);
  Vec3 e1 = a - a.dot(khat) * khat;
  e1.normalize();
  Vec3 e2 = khat.cross(e1);
  e2.normalize();
  return {e1, e2};
}

inline WaveMode make_mode(const BoxGeometry &g, const std::array<int, 3> &n,
                          double c) {
  WaveMode m;
  m.n = n;
  m.k = g.wavevector(n);
  const double kn = m.k.norm();
  if (kn == 0.0) throw Error(Errc::ZeroWavevector, "n = (0,0,0) has no triad");
  m.omega = c * kn;
  m.khat = m.k / kn;
  m.e = polarization_pair(m.khat);
  m.v = {m.e[0], m.e[1], m.khat};
  m.s = {m.khat.cross(m.e[0]), m.khat.cross(m.e[1]), m.khat};
  return m;
}

/// Every n with 0 < max|n_i| <= n_max, lexicographic in (n1, n2, n3).
inline std::vector<WaveMode> enumerate_modes(const BoxGeometry &g,
                                             double c = 1.0) {
  g.validate();
  std::vector<WaveMode> out;
  const int N = g.n_max;
  out.reserve(std::size_t(2 * N + 1) * (2 * N + 1) * (2 * N + 1) - 1);
  for (int a = -N; a <= N; ++a)
    for (int b = -N; b <= N; ++b)
      for (int d = -N; d <= N; ++d) {
        if (a == 0 && b == 0 && d == 0) continue;
        out.push_back(make_mode(g, {a, b, d}, c));
      }
  return out;
}

/// Largest deviation from the orthonormality and triad relations.
inline double triad_error(const WaveMode &m) {
  double err = 0.0;
  err = std::max(err, std::abs(m.e[0].dot(m.e[1])));
  err = std::max(err, std::abs(m.e[0].dot(m.k)) / m.k.norm());
  err = std::max(err, std::abs(m.e[1].dot(m.k)) / m.k.norm());
  err = std::max(err, std::abs(m.e[0].norm() - 1.0));
  err = std::max(err, std::abs(m.e[1].norm() - 1.0));
  for (int nu = 0; nu < 2; ++nu) {
    err = std::max(err, (m.s[nu] - m.khat.cross(m.e[nu])).norm());
  }
  err = std::max(err, (m.v[2] - m.khat).norm());
  err = std::max(err, (m.s[2] - m.khat).norm());
  return err;
}

inline Tensor3 triad_completeness(const std::array<Vec3, 3> &t) {
  Tensor3 sum = Tensor3::Zero();
  for (const auto &v : t) sum += v * v.transpose();
  return sum;
}

/// delta_lj - k_l k_j / |k|^2
inline Tensor3 transverse_delta(const Vec3 &k) {
  const double k2 = k.squaredNorm();
  if (k2 == 0.0) throw Error(Errc::ZeroWavevector, "transverse_delta at k = 0");
  return Tensor3::Identity() - k * k.transpose() / k2;
}

/// Complex vector field on a uniform periodic grid, x-fastest layout.
struct FieldSample {
  std::array<int, 3> shape{1, 1, 1};
  std::array<double, 3> spacing{1.0, 1.0, 1.0};
  std::vector<CVec3> values;

  FieldSample() = default;
  FieldSample(std::array<int, 3> shp, const BoxGeometry &g)
      : shape(shp), spacing{g.L1 / shp[0], g.L2 / shp[1], g.L3 / shp[2]},
        values(std::size_t(shp[0]) * shp[1] * shp[2], CVec3::Zero()) {}

  std::size_t index(int i, int j, int k) const {
    return std::size_t(i) + std::size_t(shape[0]) * (j + std::size_t(shape[1]) * k);
  }
  CVec3 &at(int i, int j, int k) { return values[index(i, j, k)]; }
  const CVec3 &at(int i, int j, int k) const { return values[index(i, j, k)]; }
  Vec3 position(int i, int j, int k) const {
    return {i * spacing[0], j * spacing[1], k * spacing[2]};
  }
  std::size_t size() const { return values.size(); }
};

inline void check_grid(const FieldSample &f, const BoxGeometry &g) {
  const std::array<double, 3> L{g.L1, g.L2, g.L3};
  for (int d = 0; d < 3; ++d) {
    if (f.shape[d] < 1 ||
        std::abs(f.spacing[d] * f.shape[d] - L[d]) > 1e-12 * L[d]) {
      std::ostringstream msg;
      msg << "axis " << d << ": " << f.shape[d] << " x " << f.spacing[d]
          << " does not tile L = " << L[d];
      throw Error(Errc::IncompatibleGrid, msg.str());
    }
  }
  if (f.values.size() != std::size_t(f.shape[0]) * f.shape[1] * f.shape[2]) {
    throw Error(Errc::IncompatibleGrid, "value count does not match shape");
  }
}

/// Signed frequency index of FFT bin m on an n-point axis.
inline int fft_frequency(int m, int n) { return m <= n / 2 ? m : m - n; }

namespace detail {
// In-place 3D DFT of each Cartesian component.
inline void fft3(FieldSample &f, bool inverse) {
  Eigen::FFT<double> fft;
  std::vector<cplx> in, out;
  for (int axis = 0; axis < 3; ++axis) {
    const int n = f.shape[axis];
    if (n == 1) continue;
    in.resize(n);
    const int o1 = (axis + 1) % 3, o2 = (axis + 2) % 3;
    for (int a = 0; a < f.shape[o1]; ++a) {
      for (int b = 0; b < f.shape[o2]; ++b) {
        for (int comp = 0; comp < 3; ++comp) {
          std::array<int, 3> idx{};
          idx[o1] = a;
          idx[o2] = b;
          for (int m = 0; m < n; ++m) {
            idx[axis] = m;
            in[m] = f.at(idx[0], idx[1], idx[2])(comp);
          }
          if (inverse) fft.inv(out, in);
          else fft.fwd(out, in);
          for (int m = 0; m < n; ++m) {
            idx[axis] = m;
            f.at(idx[0], idx[1], idx[2])(comp) = out[m];
          }
        }
      }
    }
  }
}
} // namespace detail

/// Per-bin wavevector of the grid's discrete Fourier basis.
inline Vec3 bin_wavevector(const FieldSample &f, const BoxGeometry &g, int i,
                           int j, int k) {
  return g.wavevector({fft_frequency(i, f.shape[0]), fft_frequency(j, f.shape[1]),
                       fft_frequency(k, f.shape[2])});
}

struct FieldSplit {
  FieldSample transverse;
  FieldSample longitudinal;
};

/// Transverse projector applied bin by bin in Fourier space; the k = 0
/// component is kept in the transverse part.
inline FieldSplit decompose_field(const FieldSample &f, const BoxGeometry &g) {
  check_grid(f, g);
  FieldSample spec = f;
  detail::fft3(spec, false);
  FieldSample trans = spec;
  for (int k = 0; k < f.shape[2]; ++k)
    for (int j = 0; j < f.shape[1]; ++j)
      for (int i = 0; i < f.shape[0]; ++i) {
        const Vec3 kv = bin_wavevector(f, g, i, j, k);
        if (kv.squaredNorm() == 0.0) continue;
        trans.at(i, j, k) = transverse_delta(kv).cast<cplx>() * spec.at(i, j, k);
      }
  detail::fft3(trans, true);
  FieldSplit out{trans, f};
  for (std::size_t n = 0; n < f.size(); ++n) {
    out.longitudinal.values[n] = f.values[n] - trans.values[n];
  }
  return out;
}

/// Spectral divergence and curl, used to check the split.
inline std::vector<cplx> spectral_divergence(const FieldSample &f,
                                             const BoxGeometry &g) {
  FieldSample spec = f;
  detail::fft3(spec, false);
  FieldSample div = spec;
  for (int k = 0; k < f.shape[2]; ++k)
    for (int j = 0; j < f.shape[1]; ++j)
      for (int i = 0; i < f.shape[0]; ++i) {
        const CVec3 kv = bin_wavevector(f, g, i, j, k).cast<cplx>();
        div.at(i, j, k) = CVec3(cplx(0, 1) * kv.dot(spec.at(i, j, k)), 0, 0);
      }
  detail::fft3(div, true);
  std::vector<cplx> out(f.size());
  for (std::size_t n = 0; n < f.size(); ++n) out[n] = div.values[n](0);
  return out;
}

inline FieldSample spectral_curl(const FieldSample &f, const BoxGeometry &g) {
  FieldSample spec = f;
  detail::fft3(spec, false);
  for (int k = 0; k < f.shape[2]; ++k)
    for (int j = 0; j < f.shape[1]; ++j)
      for (int i = 0; i < f.shape[0]; ++i) {
        const CVec3 kv = bin_wavevector(f, g, i, j, k).cast<cplx>();
        spec.at(i, j, k) = cplx(0, 1) * cross(kv, spec.at(i, j, k));
      }
  detail::fft3(spec, true);
  return spec;
}

/// Fourier coefficients normalised so that sum |c|^2 equals the grid mean
/// of |F|^2.
inline std::vector<CVec3> fourier_coefficients(const FieldSample &f) {
  FieldSample spec = f;
  detail::fft3(spec, false);
  const double n = double(f.size());
  std::vector<CVec3> out(spec.values.begin(), spec.values.end());
  for (auto &c : out) c /= n;
  return out;
}

} // namespace maqed
