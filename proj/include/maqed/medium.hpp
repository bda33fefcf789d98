#pragma once

// Causal susceptibility models and the constitutive memory integrals.

#include "maqed/error.hpp"
#include "maqed/quadrature.hpp"
#include "maqed/tensor.hpp"

#include <cmath>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

namespace maqed {

struct VacuumModel {};

/// Bound-electron oscillator: chi(s) = plasma [(s^2 + 2 gamma s) 1 + K]^-1.
struct LorentzModel {
  double plasma = 1.0;
  double gamma = 0.0;
  Tensor3 K = Tensor3::Identity();
};

/// chi(t) = chi0 / delta on (0, delta), zero elsewhere.
struct RectPulseModel {
  Tensor3 chi0 = Tensor3::Zero();
  double delta = 1.0;
};

/// Memoryless response P = eps0 chi0 E (the delta -> 0 limit of a pulse).
struct InstantaneousModel {
  Tensor3 chi0 = Tensor3::Zero();
};

/// Im chi sampled on an increasing positive grid; everything else is
/// reconstructed from it (Re chi by Kramers-Kronig, chi(t) by the sine
/// transform, chi(s) by the Cauchy integral). Zero above omega.back().
struct TabulatedModel {
  std::vector<double> omega;
  std::vector<Tensor3> im_chi;
};

using SusceptibilityModel =
    std::variant<VacuumModel, LorentzModel, RectPulseModel, InstantaneousModel,
                 TabulatedModel>;

inline std::string model_name(const SusceptibilityModel &m) {
  static const char *names[] = {"vacuum", "lorentz", "rect_pulse",
                                "instantaneous", "tabulated"};
  return names[m.index()];
}

template <class... Ts> struct overloaded : Ts... { using Ts::operator()...; };
template <class... Ts> overloaded(Ts...) -> overloaded<Ts...>;

inline void validate(const SusceptibilityModel &model) {
  std::visit(
      overloaded{
          [](const VacuumModel &) {},
          [](const LorentzModel &m) {
            if (!(m.plasma >= 0.0) || !(m.gamma >= 0.0)) {
              throw Error(Errc::InvalidArgument,
                          "lorentz: plasma and gamma must be >= 0");
            }
            psd_sqrt(m.K); // symmetric PSD or throws
          },
          [](const RectPulseModel &m) {
            if (!(m.delta > 0.0)) {
              throw Error(Errc::InvalidArgument, "rect_pulse: delta must be > 0");
            }
            if (asymmetry(m.chi0) > 1e-12) {
              throw Error(Errc::NotSymmetric, "rect_pulse: chi0 not symmetric");
            }
          },
          [](const InstantaneousModel &m) {
            if (asymmetry(m.chi0) > 1e-12) {
              throw Error(Errc::NotSymmetric, "instantaneous: chi0 not symmetric");
            }
          },
          [](const TabulatedModel &m) {
            if (m.omega.size() < 2 || m.omega.size() != m.im_chi.size()) {
              throw Error(Errc::IncompatibleGrid,
                          "tabulated: need >= 2 nodes with one tensor each");
            }
            if (!(m.omega.front() > 0.0)) {
              throw Error(Errc::IncompatibleGrid, "tabulated: omega must be > 0");
            }
            require_increasing(m.omega, "tabulated");
          }},
      model);
}

namespace detail {

// sin(x)/x and 2 sin^2(x/2)/x, stable near 0
inline double sinc(double x) {
  return std::abs(x) < 1e-4 ? 1.0 - x * x / 6.0 : std::sin(x) / x;
}
inline double versinc(double x) {
  if (std::abs(x) < 1e-4) return x / 2.0 - x * x * x / 24.0;
  const double h = std::sin(0.5 * x);
  return 2.0 * h * h / x;
}
// (1 - exp(-z)) / z
inline cplx one_minus_exp_over(cplx z) {
  if (std::abs(z) < 1e-3) return 1.0 - z / 2.0 + z * z / 6.0 - z * z * z / 24.0;
  return (1.0 - std::exp(-z)) / z;
}

// e^{-g t} sin(sqrt(k - g^2) t) / sqrt(k - g^2), continued through k = g^2
inline double damped_sinc(double kappa, double gamma, double t) {
  const double disc = kappa - gamma * gamma;
  const double scale = std::max(kappa, gamma * gamma);
  const double decay = std::exp(-gamma * t);
  if (std::abs(disc) <= 1e-14 * scale) return decay * t;
  if (disc > 0) {
    const double w = std::sqrt(disc);
    return decay * std::sin(w * t) / w;
  }
  const double w = std::sqrt(-disc);
  // e^{-g t} sinh(w t) / w with the growing exponential folded in
  return 0.5 * (std::exp((w - gamma) * t) - std::exp(-(w + gamma) * t)) / w;
}

inline CTensor3 to_complex(const Tensor3 &m) { return m.cast<cplx>(); }

inline Tensor3 tabulated_im(const TabulatedModel &m, double w) {
  if (w <= 0.0 || w > m.omega.back()) return Tensor3::Zero();
  if (w < m.omega.front()) return m.im_chi.front() * (w / m.omega.front());
  const auto it = std::upper_bound(m.omega.begin(), m.omega.end(), w);
  const std::size_t i = std::min<std::size_t>(it - m.omega.begin(), m.omega.size() - 1);
  const double x0 = m.omega[i - 1], x1 = m.omega[i];
  const double u = (w - x0) / (x1 - x0);
  return m.im_chi[i - 1] * (1.0 - u) + m.im_chi[i] * u;
}

} // namespace detail

/// Time-domain kernel. Exactly zero for t <= 0.
inline Tensor3 chi_time(const SusceptibilityModel &model, double t) {
  if (t <= 0.0) return Tensor3::Zero();
  return std::visit(
      overloaded{
          [](const VacuumModel &) -> Tensor3 { return Tensor3::Zero(); },
          [t](const LorentzModel &m) -> Tensor3 {
            const SymmetricEigen eig = symmetric_eigen(m.K);
            Vec3 d;
            for (int i = 0; i < 3; ++i) {
              d(i) = m.plasma *
                     detail::damped_sinc(std::max(eig.values(i), 0.0), m.gamma, t);
            }
            return eig.vectors * d.asDiagonal() * eig.vectors.transpose();
          },
          [t](const RectPulseModel &m) -> Tensor3 {
            return t < m.delta ? Tensor3(m.chi0 / m.delta) : Tensor3::Zero();
          },
          [](const InstantaneousModel &) -> Tensor3 { return Tensor3::Zero(); },
          [t](const TabulatedModel &m) -> Tensor3 {
            CubicSpline<Tensor3> h(m.omega, m.im_chi);
            SineTransformOptions opt;
            return sine_transform(h, t, opt).value * (2.0 / std::numbers::pi);
          }},
      model);
}

/// Frequency image with the e^{i omega t} convention, so Im chi >= 0 on
/// absorption lines and chi(-omega) = conj(chi(omega)).
inline CTensor3 chi_freq(const SusceptibilityModel &model, double omega) {
  if (omega < 0.0) return chi_freq(model, -omega).conjugate();
  return std::visit(
      overloaded{
          [](const VacuumModel &) -> CTensor3 { return CTensor3::Zero(); },
          [omega](const LorentzModel &m) -> CTensor3 {
            const SymmetricEigen eig = symmetric_eigen(m.K);
            const double w2 = omega * omega;
            CVec3 d;
            for (int i = 0; i < 3; ++i) {
              const double kappa = eig.values(i);
              if (m.gamma == 0.0 &&
                  std::abs(kappa - w2) <= 1e-12 * std::max({kappa, w2, 1e-300})) {
                std::ostringstream msg;
                msg << "undamped resonance at omega^2 = " << w2;
                throw Error(Errc::SingularResonance, msg.str());
              }
              d(i) = m.plasma / cplx(kappa - w2, -2.0 * m.gamma * omega);
            }
            const CTensor3 v = detail::to_complex(eig.vectors);
            return v * d.asDiagonal() * v.transpose();
          },
          [omega](const RectPulseModel &m) -> CTensor3 {
            const double x = omega * m.delta;
            return detail::to_complex(m.chi0) *
                   cplx(detail::sinc(x), detail::versinc(x));
          },
          [](const InstantaneousModel &m) -> CTensor3 {
            return detail::to_complex(m.chi0);
          },
          [omega](const TabulatedModel &m) -> CTensor3 {
            const Tensor3 re = kramers_kronig_real<Tensor3>(m.omega, m.im_chi, omega);
            CTensor3 out = detail::to_complex(re);
            out += cplx(0.0, 1.0) * detail::to_complex(detail::tabulated_im(m, omega));
            return out;
          }},
      model);
}

/// Laplace image int_0^inf chi(t) e^{-st} dt; chi_freq(w) = chi_laplace(-i w).
inline CTensor3 chi_laplace(const SusceptibilityModel &model, cplx s) {
  return std::visit(
      overloaded{
          [](const VacuumModel &) -> CTensor3 { return CTensor3::Zero(); },
          [s](const LorentzModel &m) -> CTensor3 {
            const SymmetricEigen eig = symmetric_eigen(m.K);
            CVec3 d;
            for (int i = 0; i < 3; ++i) {
              d(i) = m.plasma / (s * s + 2.0 * m.gamma * s + eig.values(i));
            }
            const CTensor3 v = detail::to_complex(eig.vectors);
            return v * d.asDiagonal() * v.transpose();
          },
          [s](const RectPulseModel &m) -> CTensor3 {
            return detail::to_complex(m.chi0) *
                   detail::one_minus_exp_over(s * m.delta);
          },
          [](const InstantaneousModel &m) -> CTensor3 {
            return detail::to_complex(m.chi0);
          },
          [s](const TabulatedModel &m) -> CTensor3 {
            return cauchy_laplace(m.omega, m.im_chi, s);
          }},
      model);
}

/// chi(s) = constant + sum_i weight_i / (s^2 + b_i s + c_i).
struct RationalSusceptibility {
  Tensor3 constant = Tensor3::Zero();
  struct Term {
    Tensor3 weight;
    double b;
    double c;
  };
  std::vector<Term> terms;

  CTensor3 operator()(cplx s) const {
    CTensor3 out = constant.cast<cplx>();
    for (const auto &t : terms) {
      out += t.weight.cast<cplx>() / (s * s + t.b * s + t.c);
    }
    return out;
  }
};

/// Partial-fraction form when chi(s) is rational, nullopt otherwise.
inline std::optional<RationalSusceptibility>
rational_form(const SusceptibilityModel &model) {
  return std::visit(
      overloaded{
          [](const VacuumModel &) -> std::optional<RationalSusceptibility> {
            return RationalSusceptibility{};
          },
          [](const LorentzModel &m) -> std::optional<RationalSusceptibility> {
            RationalSusceptibility r;
            if (m.plasma == 0.0) return r;
            const SymmetricEigen eig = symmetric_eigen(m.K);
            const double scale = std::max(eig.values.cwiseAbs().maxCoeff(), 1e-300);
            for (int i = 0; i < 3; ++i) {
              const Vec3 v = eig.vectors.col(i);
              const double kappa = eig.values(i);
              bool merged = false;
              for (auto &t : r.terms) {
                if (std::abs(t.c - kappa) <= 1e-12 * scale) {
                  t.weight += m.plasma * v * v.transpose();
                  merged = true;
                }
              }
              if (!merged) {
                r.terms.push_back({m.plasma * v * v.transpose(), 2.0 * m.gamma, kappa});
              }
            }
            return r;
          },
          [](const RectPulseModel &) -> std::optional<RationalSusceptibility> {
            return std::nullopt;
          },
          [](const InstantaneousModel &m) -> std::optional<RationalSusceptibility> {
            RationalSusceptibility r;
            r.constant = m.chi0;
            return r;
          },
          [](const TabulatedModel &) -> std::optional<RationalSusceptibility> {
            return std::nullopt;
          }},
      model);
}

/// Smallest eigenvalue of Im chi(omega), omega > 0.
inline double passivity_margin(const SusceptibilityModel &model, double omega) {
  const Tensor3 im = chi_freq(model, omega).imag();
  return symmetric_eigen(im).values(0);
}

struct FrequencyWindow {
  double lo;
  double hi;
};

/// Frequency intervals on which Im chi fails to be PSD. For the pulse model
/// the intervals are exact: Im chi = chi0 * 2 sin^2(w d / 2) / (w d), so an
/// indefinite chi0 is non-passive between consecutive zeros w d = 2 pi m.
/// Other models are scanned on the grid and each run of failing nodes is
/// bracketed by its passing neighbours.
inline std::vector<FrequencyWindow>
nonpassive_windows(const SusceptibilityModel &model,
                   const std::vector<double> &grid, double tol = 1e-10) {
  std::vector<FrequencyWindow> out;
  if (grid.empty()) return out;
  if (const auto *rp = std::get_if<RectPulseModel>(&model)) {
    const SymmetricEigen eig = symmetric_eigen(rp->chi0);
    const double lmax = std::max(eig.values.cwiseAbs().maxCoeff(), 1e-300);
    if (eig.values(0) >= -tol * lmax) return out;
    const double period = 2.0 * std::numbers::pi / rp->delta;
    const double lo = grid.front(), hi = grid.back();
    for (long m = long(std::floor(lo / period)); m * period < hi; ++m) {
      out.push_back({std::max(lo, m * period), std::min(hi, (m + 1) * period)});
    }
    return out;
  }
  std::vector<bool> bad(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const Tensor3 im = chi_freq(model, grid[i]).imag();
    const SymmetricEigen eig = symmetric_eigen(im);
    const double lmax = std::max(eig.values.cwiseAbs().maxCoeff(), 1e-300);
    bad[i] = eig.values(0) < -tol * lmax;
  }
  for (std::size_t i = 0; i < grid.size();) {
    if (!bad[i]) {
      ++i;
      continue;
    }
    std::size_t j = i;
    while (j + 1 < grid.size() && bad[j + 1]) ++j;
    out.push_back({i > 0 ? grid[i - 1] : grid[i],
                   j + 1 < grid.size() ? grid[j + 1] : grid[j]});
    i = j + 1;
  }
  return out;
}

/// Uniformly sampled vector time series v(t0 + j dt).
struct FieldHistory {
  double t0 = 0.0;
  double dt = 1.0;
  std::vector<Vec3> samples;

  double t_end() const { return t0 + dt * double(samples.size() - 1); }
  bool covers(double a, double b) const {
    const double slack = 1e-9 * dt;
    return !samples.empty() && a >= t0 - slack && b <= t_end() + slack;
  }
  /// Linear interpolation; callers check coverage.
  Vec3 operator()(double t) const {
    const double u = (t - t0) / dt;
    if (u <= 0.0) return samples.front();
    const std::size_t j = std::size_t(std::floor(u));
    if (j + 1 >= samples.size()) return samples.back();
    const double f = u - double(j);
    return samples[j] * (1.0 - f) + samples[j + 1] * f;
  }
  void validate() const {
    if (!(dt > 0.0)) throw Error(Errc::InvalidArgument, "history dt must be > 0");
    for (const auto &v : samples) {
      if (!v.allFinite()) throw Error(Errc::InvalidArgument, "non-finite history sample");
    }
  }
};

namespace detail {

// Kernel value at a panel end, taken from inside the sub-interval
// (side +1: u approached from above, -1: from below). The nudge keeps
// rounding in T - t' from landing an end node on the wrong side of a jump.
inline Tensor3 kernel_limit(const SusceptibilityModel &model, double u, int side,
                            double h) {
  return chi_time(model, u + side * 1e-9 * h);
}

// int_0^T chi(T - t') F(sign t') dt', trapezoid on panels no wider than dt,
// split where the kernel jumps.
inline Vec3 memory_integral(const SusceptibilityModel &model,
                            const FieldHistory &field, double t) {
  const double T = std::abs(t);
  const double sign = t >= 0.0 ? 1.0 : -1.0;
  std::vector<double> cuts{0.0, T};
  if (const auto *rp = std::get_if<RectPulseModel>(&model)) {
    if (T - rp->delta > 0.0) cuts.insert(cuts.begin() + 1, T - rp->delta);
  }
  Vec3 acc = Vec3::Zero();
  for (std::size_t c = 0; c + 1 < cuts.size(); ++c) {
    const double a = cuts[c], b = cuts[c + 1];
    if (b <= a) continue;
    const int panels = std::max(1, int(std::ceil((b - a) / field.dt - 1e-9)));
    const double h = (b - a) / panels;
    for (int j = 0; j <= panels; ++j) {
      const double tp = a + j * h;
      const double u = T - tp;
      // end nodes take the kernel limit from inside this sub-interval
      const int side = j == 0 ? -1 : (j == panels ? +1 : 0);
      const Tensor3 k = side == 0 ? chi_time(model, u) : kernel_limit(model, u, side, h);
      const double w = (j == 0 || j == panels) ? 0.5 * h : h;
      acc += w * (k * field(sign * tp));
    }
  }
  return acc;
}

inline Vec3 constitutive(const SusceptibilityModel &model, const FieldHistory *noise,
                         const FieldHistory &field, double t, double scale) {
  field.validate();
  const double T = std::abs(t);
  const double lo = t >= 0.0 ? 0.0 : -T, hi = t >= 0.0 ? T : 0.0;
  if (!field.covers(lo, hi)) {
    std::ostringstream msg;
    msg << "history [" << field.t0 << ", " << field.t_end()
        << "] does not cover [" << lo << ", " << hi << "]";
    throw Error(Errc::InsufficientHistory, msg.str());
  }
  Vec3 out = Vec3::Zero();
  if (noise != nullptr && !noise->samples.empty()) {
    if (!noise->covers(t, t)) {
      throw Error(Errc::InsufficientHistory, "noise series does not cover t");
    }
    out += (*noise)(t);
  }
  if (const auto *inst = std::get_if<InstantaneousModel>(&model)) {
    return out + scale * (inst->chi0 * field(t));
  }
  return out + scale * memory_integral(model, field, t);
}

} // namespace detail

/// P(t) = P_N(t) + eps0 int_0^|t| chi(|t| - t') E(+-t') dt', upper sign for
/// t >= 0.
inline Vec3 polarization_response(const SusceptibilityModel &model,
                                  const FieldHistory *noise,
                                  const FieldHistory &e_history, double t,
                                  const PhysicalConstants &k) {
  return detail::constitutive(model, noise, e_history, t, k.eps0);
}

/// M(t) = M_N(t) + (1/mu0) int_0^|t| chi_m(|t| - t') B(+-t') dt'.
inline Vec3 magnetization_response(const SusceptibilityModel &model,
                                   const FieldHistory *noise,
                                   const FieldHistory &b_history, double t,
                                   const PhysicalConstants &k) {
  return detail::constitutive(model, noise, b_history, t, 1.0 / k.mu0);
}

/// Piecewise-constant medium on a regular grid of cells over the box.
struct MaterialMap {
  std::array<double, 3> extent{1.0, 1.0, 1.0};
  std::array<int, 3> cells{1, 1, 1};
  std::vector<SusceptibilityModel> models{VacuumModel{}};

  static MaterialMap homogeneous(SusceptibilityModel m) {
    MaterialMap map;
    map.models = {std::move(m)};
    return map;
  }

  bool is_homogeneous() const { return models.size() == 1; }

  /// Model of the cell containing r (periodic wrap).
  const SusceptibilityModel &at(const Vec3 &r) const {
    if (is_homogeneous()) return models.front();
    std::array<int, 3> idx{};
    for (int d = 0; d < 3; ++d) {
      double u = std::fmod(r(d) / extent[d], 1.0);
      if (u < 0) u += 1.0;
      idx[d] = std::min(cells[d] - 1, int(u * cells[d]));
    }
    return models[idx[0] + cells[0] * (idx[1] + cells[1] * idx[2])];
  }
};

inline Tensor3 chi_time(const MaterialMap &m, const Vec3 &r, double t) {
  return chi_time(m.at(r), t);
}
inline CTensor3 chi_freq(const MaterialMap &m, const Vec3 &r, double omega) {
  return chi_freq(m.at(r), omega);
}
inline CTensor3 chi_laplace(const MaterialMap &m, const Vec3 &r, cplx s) {
  return chi_laplace(m.at(r), s);
}

} // namespace maqed
