#pragma once

// Susceptibility <-> coupling-tensor spectral density, both directions, and
// factorization of the density into a coupling tensor.

#include "maqed/error.hpp"
#include "maqed/medium.hpp"
#include "maqed/quadrature.hpp"
#include "maqed/tensor.hpp"

#include <cmath>
#include <numbers>
#include <optional>
#include <sstream>
#include <vector>

namespace maqed {

struct CouplingSpectrum {
  std::vector<double> omega;
  std::vector<Tensor3> ffT;
  std::vector<Tensor3> ggT;
  std::vector<Tensor3> factor_f; // empty until factorized
  std::vector<Tensor3> factor_g;
  PhysicalConstants consts;

  std::size_t size() const { return omega.size(); }
  bool factorized() const { return !factor_f.empty(); }
};

struct GridSpec {
  double omega_ref = 1.0;
  double lo = 1e-3; // multiples of omega_ref
  double hi = 1e3;
  std::size_t nodes = 2048;

  std::vector<double> build() const {
    return log_grid(lo * omega_ref, hi * omega_ref, nodes);
  }
};

namespace detail {
inline Tensor3 checked_absorptive(const SusceptibilityModel &m, double omega,
                                  double tol, const char *which) {
  Tensor3 im = chi_freq(m, omega).imag();
  im = 0.5 * (im + im.transpose());
  const SymmetricEigen eig = symmetric_eigen(im);
  const double lmax = eig.values.cwiseAbs().maxCoeff();
  if (lmax > 0.0 && eig.values(0) < -tol * lmax) {
    std::ostringstream msg;
    msg << which << " Im chi has eigenvalue " << eig.values(0) << " at omega = "
        << omega;
    throw Error(Errc::NonPassive, msg.str());
  }
  return im;
}
} // namespace detail

/// (hbar c^3 eps0 / 4 pi^2 w^2) Im chi_e(w); zero at w = 0.
inline Tensor3 ff_t_from_chi(const SusceptibilityModel &chi_e, double omega,
                             const PhysicalConstants &k, double tol = 1e-10) {
  if (omega < 0.0) throw Error(Errc::InvalidArgument, "omega must be >= 0");
  if (omega == 0.0) return Tensor3::Zero();
  const Tensor3 im = detail::checked_absorptive(chi_e, omega, tol, "electric");
  const double pi = std::numbers::pi;
  return (k.hbar * k.c * k.c * k.c * k.eps0 / (4.0 * pi * pi * omega * omega)) * im;
}

/// (hbar c^3 / 4 pi^2 mu0 w^2) Im chi_m(w); zero at w = 0.
inline Tensor3 gg_t_from_chi(const SusceptibilityModel &chi_m, double omega,
                             const PhysicalConstants &k, double tol = 1e-10) {
  if (omega < 0.0) throw Error(Errc::InvalidArgument, "omega must be >= 0");
  if (omega == 0.0) return Tensor3::Zero();
  const Tensor3 im = detail::checked_absorptive(chi_m, omega, tol, "magnetic");
  const double pi = std::numbers::pi;
  return (k.hbar * k.c * k.c * k.c / (4.0 * pi * pi * k.mu0 * omega * omega)) * im;
}

inline CouplingSpectrum build_spectrum(const SusceptibilityModel &chi_e,
                                       const SusceptibilityModel &chi_m,
                                       std::vector<double> grid,
                                       const PhysicalConstants &k) {
  require_increasing(grid, "spectrum");
  CouplingSpectrum s;
  s.consts = k;
  s.omega = std::move(grid);
  s.ffT.reserve(s.omega.size());
  s.ggT.reserve(s.omega.size());
  for (const double w : s.omega) {
    s.ffT.push_back(ff_t_from_chi(chi_e, w, k));
    s.ggT.push_back(gg_t_from_chi(chi_m, w, k));
  }
  return s;
}

enum class Field { Electric, Magnetic };

/// Rebuilds chi(t) from a sampled spectral density:
///   chi_e(t) = (8 pi / hbar c^3 eps0) int w^2 ffT(w) sin(w t) dw,
///   chi_m(t) = (8 pi mu0 / hbar c^3) int w^2 ggT(w) sin(w t) dw.
class ChiReconstructor {
public:
  ChiReconstructor(const CouplingSpectrum &s, Field field,
                   SineTransformOptions opt = {})
      : opt_(opt) {
    const auto &k = s.consts;
    const auto &dens = field == Field::Electric ? s.ffT : s.ggT;
    if (dens.size() != s.omega.size() || s.omega.size() < 2) {
      throw Error(Errc::IncompatibleGrid, "spectrum needs >= 2 nodes");
    }
    const double c3 = k.c * k.c * k.c;
    prefactor_ = field == Field::Electric
                     ? 8.0 * std::numbers::pi / (k.hbar * c3 * k.eps0)
                     : 8.0 * std::numbers::pi * k.mu0 / (k.hbar * c3);
    std::vector<Tensor3> h(dens.size());
    for (std::size_t i = 0; i < dens.size(); ++i) {
      h[i] = s.omega[i] * s.omega[i] * dens[i];
    }
    spline_ = CubicSpline<Tensor3>(s.omega, std::move(h));
  }

  Tensor3 operator()(double t) const { return evaluate(t).value; }

  SineTransformResult<Tensor3> evaluate(double t) const {
    if (t <= 0.0) return {Tensor3::Zero(), 0.0, false};
    auto r = sine_transform(spline_, t, opt_);
    r.value *= prefactor_;
    return r;
  }

private:
  SineTransformOptions opt_;
  double prefactor_ = 0.0;
  CubicSpline<Tensor3> spline_;
};

inline Tensor3 chi_from_coupling(const CouplingSpectrum &s, double t,
                                 Field field = Field::Electric,
                                 SineTransformOptions opt = {}) {
  if (t <= 0.0) return Tensor3::Zero();
  return ChiReconstructor(s, field, opt)(t);
}

/// Fills factor_f, factor_g with psd_sqrt(density) * gauge.
inline CouplingSpectrum factorize_spectrum(CouplingSpectrum s,
                                           const std::optional<Tensor3> &gauge = {},
                                           double tol = 1e-10) {
  s.factor_f.resize(s.size());
  s.factor_g.resize(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    s.factor_f[i] = psd_sqrt(s.ffT[i], tol);
    s.factor_g[i] = psd_sqrt(s.ggT[i], tol);
    if (gauge) {
      s.factor_f[i] = apply_gauge(s.factor_f[i], *gauge);
      s.factor_g[i] = apply_gauge(s.factor_g[i], *gauge);
    }
  }
  return s;
}

/// Lorentz density by the closed matrix expression
///   (hbar c^3 eps0 / 4 pi^2 w^2) plasma 2 gamma w [(K - w^2)^2 + 4 gamma^2 w^2]^-1.
inline Tensor3 lorentz_spectral_density(const LorentzModel &m, double omega,
                                        const PhysicalConstants &k) {
  if (omega == 0.0) return Tensor3::Zero();
  const double w2 = omega * omega;
  const Tensor3 a = m.K - w2 * Tensor3::Identity();
  const Tensor3 denom = a * a + 4.0 * m.gamma * m.gamma * w2 * Tensor3::Identity();
  const double pi = std::numbers::pi;
  const double pre = k.hbar * k.c * k.c * k.c * k.eps0 / (4.0 * pi * pi * w2);
  const Tensor3 out = pre * m.plasma * 2.0 * m.gamma * omega * denom.inverse();
  return 0.5 * (out + out.transpose());
}

struct ResonanceWeight {
  double omega;        // sqrt of the K eigenvalue
  Vec3 direction;      // unit eigenvector
  Tensor3 projector;   // R R^t
  Tensor3 printed;     // hbar c^3 eps0 / (4 pi w^2) R R^t
  Tensor3 lorentzian;  // gamma -> 0 limit of the density: plasma hbar c^3 eps0 / (8 pi w^3) R R^t
};

/// Weights of the delta lines the density collapses to as gamma -> 0. Two
/// normalizations are returned: the closed form quoted for this limit, and
/// the area under each Lorentzian line of the density itself.
inline std::vector<ResonanceWeight>
lorentz_resonance_weights(const LorentzModel &m, const PhysicalConstants &k) {
  const SymmetricEigen eig = symmetric_eigen(m.K);
  const double pi = std::numbers::pi;
  const double base = k.hbar * k.c * k.c * k.c * k.eps0;
  std::vector<ResonanceWeight> out;
  for (int i = 0; i < 3; ++i) {
    if (eig.values(i) <= 0.0) continue;
    const double w = std::sqrt(eig.values(i));
    const Vec3 r = eig.vectors.col(i);
    const Tensor3 p = r * r.transpose();
    out.push_back({w, r, p, base / (4.0 * pi * w * w) * p,
                   m.plasma * base / (8.0 * pi * w * w * w) * p});
  }
  return out;
}

/// int_lo^hi ffT(w) dw by composite 8-point Gauss-Legendre evaluated on the
/// model directly (no sampling grid), for narrow lines.
inline Tensor3 spectral_window_integral(const SusceptibilityModel &chi_e,
                                        double lo, double hi,
                                        const PhysicalConstants &k,
                                        int panels = 4000) {
  Tensor3 acc = Tensor3::Zero();
  const double h = (hi - lo) / panels;
  for (int p = 0; p < panels; ++p) {
    const double a = lo + p * h;
    for (int q = 0; q < 8; ++q) {
      const double w = a + 0.5 * h * (detail::gl8_x[q] + 1.0);
      acc += (0.5 * h * detail::gl8_w[q]) * ff_t_from_chi(chi_e, w, k);
    }
  }
  return acc;
}

} // namespace maqed
