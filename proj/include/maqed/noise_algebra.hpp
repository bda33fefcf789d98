#pragma once

// Spectral densities of the noise polarization and magnetization, and the
// check that they reproduce the absorptive part of the susceptibilities.

#include "maqed/coupling.hpp"
#include "maqed/error.hpp"
#include "maqed/medium.hpp"
#include "maqed/mode_space.hpp"
#include "maqed/tensor.hpp"

#include <cmath>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace maqed {

struct NoiseDensity {
  Tensor3 S_P = Tensor3::Zero();
  Tensor3 S_M = Tensor3::Zero();
};

inline void require_complete(const std::array<Vec3, 3> &triad, double tol = 1e-12) {
  const double err = (triad_completeness(triad) - Tensor3::Identity()).norm();
  if (!(err <= tol)) {
    std::ostringstream msg;
    msg << "triad completeness error " << err;
    throw Error(Errc::InvalidArgument, msg.str());
  }
}

/// Commutator coefficient of the Fourier-domain noise sources, built from
/// the mode expansion: each of the three medium branches nu contributes
/// (f v_nu)(f v_nu)^t, and the q-integral contributes 4 pi w^2 / c^3.
inline NoiseDensity noise_density(const Tensor3 &f, const Tensor3 &g, double omega,
                                  const WaveMode &mode, const PhysicalConstants &k) {
  require_complete(mode.v);
  require_complete(mode.s);
  const double dos = 4.0 * std::numbers::pi * omega * omega / (k.c * k.c * k.c);
  NoiseDensity out;
  for (int nu = 0; nu < 3; ++nu) {
    const Vec3 fv = f * mode.v[nu];
    const Vec3 gs = g * mode.s[nu];
    out.S_P += fv * fv.transpose();
    out.S_M += gs * gs.transpose();
  }
  out.S_P *= dos;
  out.S_M *= dos;
  return out;
}

/// Density at spectrum node i; uses the stored factors when present, the
/// canonical square roots otherwise.
inline NoiseDensity noise_density_from_coupling(const CouplingSpectrum &s,
                                                std::size_t i,
                                                const WaveMode &mode) {
  const Tensor3 f = s.factorized() ? s.factor_f[i] : psd_sqrt(s.ffT[i]);
  const Tensor3 g = s.factorized() ? s.factor_g[i] : psd_sqrt(s.ggT[i]);
  return noise_density(f, g, s.omega[i], mode, s.consts);
}

/// Right-hand sides: (hbar eps0 / pi) Im chi_e and (hbar / mu0 pi) Im chi_m.
inline NoiseDensity commutator_rhs(const SusceptibilityModel &chi_e,
                                   const SusceptibilityModel &chi_m, double omega,
                                   const PhysicalConstants &k) {
  const double pi = std::numbers::pi;
  NoiseDensity out;
  out.S_P = (k.hbar * k.eps0 / pi) * chi_freq(chi_e, omega).imag();
  out.S_M = (k.hbar / (k.mu0 * pi)) * chi_freq(chi_m, omega).imag();
  return out;
}

struct CommutatorNode {
  double omega = 0.0;
  double dev_P = 0.0;
  double dev_M = 0.0;
  bool passive = true;
  std::string error;
};

struct CommutatorReport {
  double tolerance = 1e-10;
  std::vector<CommutatorNode> nodes;
  double max_dev_P = 0.0;
  double max_dev_M = 0.0;
  double argmax_P = 0.0;
  double argmax_M = 0.0;
  std::size_t nonpassive_nodes = 0;
  bool passed = true;
};

struct CommutatorCheck {
  double tol = 1e-10;
  /// Optional spectrum to test instead of the one derived from the model
  /// (same grid is required).
  const CouplingSpectrum *spectrum = nullptr;
  std::optional<WaveMode> mode;
};

/// Dual-path comparison at each grid node: the density built from the
/// coupling factors against Im chi straight from the model. Non-passive
/// nodes are reported and excluded from the deviation.
inline CommutatorReport
verify_commutator_identity(const SusceptibilityModel &chi_e,
                           const SusceptibilityModel &chi_m,
                           const std::vector<double> &grid,
                           const PhysicalConstants &k,
                           const CommutatorCheck &opt = {}) {
  if (opt.spectrum && opt.spectrum->omega != grid) {
    throw Error(Errc::IncompatibleGrid, "spectrum grid differs from check grid");
  }
  const WaveMode mode =
      opt.mode ? *opt.mode : make_mode(BoxGeometry{}, {1, 2, 3}, k.c);
  CommutatorReport rep;
  rep.tolerance = opt.tol;
  auto rel = [](const Tensor3 &a, const Tensor3 &b) {
    return relative_frobenius(a, b);
  };
  for (std::size_t i = 0; i < grid.size(); ++i) {
    CommutatorNode node;
    node.omega = grid[i];
    try {
      Tensor3 f, g;
      if (opt.spectrum) {
        const auto &s = *opt.spectrum;
        f = s.factorized() ? s.factor_f[i] : psd_sqrt(s.ffT[i]);
        g = s.factorized() ? s.factor_g[i] : psd_sqrt(s.ggT[i]);
      } else {
        f = psd_sqrt(ff_t_from_chi(chi_e, grid[i], k));
        g = psd_sqrt(gg_t_from_chi(chi_m, grid[i], k));
      }
      const NoiseDensity lhs = noise_density(f, g, grid[i], mode, k);
      const NoiseDensity rhs = commutator_rhs(chi_e, chi_m, grid[i], k);
      node.dev_P = rel(lhs.S_P, rhs.S_P);
      node.dev_M = rel(lhs.S_M, rhs.S_M);
    } catch (const Error &e) {
      if (e.code() != Errc::NonPassive && e.code() != Errc::NegativeEigenvalue) throw;
      node.passive = false;
      node.error = e.what();
      ++rep.nonpassive_nodes;
    }
    if (node.dev_P > rep.max_dev_P) {
      rep.max_dev_P = node.dev_P;
      rep.argmax_P = node.omega;
    }
    if (node.dev_M > rep.max_dev_M) {
      rep.max_dev_M = node.dev_M;
      rep.argmax_M = node.omega;
    }
    rep.nodes.push_back(std::move(node));
  }
  rep.passed = rep.max_dev_P <= opt.tol && rep.max_dev_M <= opt.tol;
  return rep;
}

inline void enforce(const CommutatorReport &rep) {
  if (!rep.passed) {
    std::ostringstream msg;
    msg << "max deviation P " << rep.max_dev_P << " at omega = " << rep.argmax_P
        << ", M " << rep.max_dev_M << " at omega = " << rep.argmax_M
        << " (tolerance " << rep.tolerance << ")";
    throw Error(Errc::IdentityViolated, msg.str());
  }
}

} // namespace maqed
