#pragma once

// Plane-wave dynamics in a homogeneous anisotropic bulk: the Laplace-domain
// wave operator, its dressed poles, the evolution kernels, and coherent-state
// field expectations.

#include "maqed/coupling.hpp"
#include "maqed/error.hpp"
#include "maqed/laplace.hpp"
#include "maqed/medium.hpp"
#include "maqed/mode_space.hpp"
#include "maqed/tensor.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <array>
#include <limits>
#include <cmath>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <vector>

namespace maqed {

struct LambdaOperator {
  Vec3 k = Vec3::Zero();
  SusceptibilityModel chi_e = VacuumModel{};
  SusceptibilityModel chi_m = VacuumModel{};
  PhysicalConstants consts;

  /// Only homogeneous media have a plane-wave operator.
  static LambdaOperator from(const MaterialMap &e, const MaterialMap &m,
                             const Vec3 &k, const PhysicalConstants &consts) {
    if (!e.is_homogeneous() || !m.is_homogeneous()) {
      throw Error(Errc::UnsupportedGeometry,
                  "plane-wave dynamics needs a homogeneous medium");
    }
    return {k, e.models.front(), m.models.front(), consts};
  }
};

inline CTensor3 assemble_lambda(const LambdaOperator &op, cplx s) {
  const CTensor3 chim = chi_laplace(op.chi_m, s);
  const CTensor3 chie = chi_laplace(op.chi_e, s);
  const CTensor3 one = CTensor3::Identity();
  return -double_epsilon_contract<cplx>(op.k, one - chim) +
         (op.consts.mu0 * op.consts.eps0) * s * s * (one + chie);
}

inline CTensor3 invert_lambda(const LambdaOperator &op, cplx s) {
  const CTensor3 L = assemble_lambda(op, s);
  // max entry: the Frobenius norm overflows where a pulse kernel grows
  const double n = L.cwiseAbs().maxCoeff();
  const Eigen::FullPivLU<CTensor3> lu(L);
  const double piv = lu.matrixLU().diagonal().cwiseAbs().minCoeff();
  if (!(piv > 1e-14 * n)) {
    std::ostringstream msg;
    msg << "Lambda singular at s = " << s.real() << (s.imag() < 0 ? "" : "+")
        << s.imag() << "i";
    throw Error(Errc::SingularAtDispersion, msg.str());
  }
  return lu.inverse();
}

namespace detail {

inline Polynomial denominator_of(const RationalSusceptibility &r) {
  Polynomial d = Polynomial::constant(1.0);
  for (const auto &t : r.terms) d = d * Polynomial({t.c, t.b, 1.0});
  return d;
}

// real matrix polynomial, ascending powers
using MatrixPolynomial = std::vector<Tensor3>;

inline void accumulate(MatrixPolynomial &acc, const Polynomial &p, const Tensor3 &a) {
  const auto &c = p.coeffs();
  if (acc.size() < c.size()) acc.resize(c.size(), Tensor3::Zero());
  for (std::size_t i = 0; i < c.size(); ++i) acc[i] += c[i].real() * a;
}

// D(s) (1 + sign * chi(s)) with D the product of the term denominators
inline MatrixPolynomial cleared(const RationalSusceptibility &r, double sign) {
  MatrixPolynomial out;
  accumulate(out, denominator_of(r), Tensor3::Identity() + sign * r.constant);
  for (std::size_t j = 0; j < r.terms.size(); ++j) {
    Polynomial rest = Polynomial::constant(1.0);
    for (std::size_t i = 0; i < r.terms.size(); ++i) {
      if (i != j) rest = rest * Polynomial({r.terms[i].c, r.terms[i].b, 1.0});
    }
    accumulate(out, rest, sign * r.terms[j].weight);
  }
  return out;
}

} // namespace detail

/// Poles of Lambda^-1 and of the magnetic susceptibility, for rational
/// models. M(s) = D_e(s) D_m(s) Lambda(s) is a matrix polynomial (D_* clear
/// the susceptibility denominators) whose latent roots come from a block
/// companion matrix in the scaled variable s / r.
struct DispersionPoles {
  std::vector<cplx> lambda_roots; // roots of det M, with multiplicity
  std::vector<cplx> magnetic;     // roots of D_m
  double scale = 1.0;             // largest root magnitude

  std::vector<cplx> candidates() const {
    std::vector<cplx> out = lambda_roots;
    out.insert(out.end(), magnetic.begin(), magnetic.end());
    return out;
  }
};

inline std::optional<DispersionPoles> dispersion_poles(const LambdaOperator &op) {
  const auto re = rational_form(op.chi_e);
  const auto rm = rational_form(op.chi_m);
  if (!re || !rm) return std::nullopt;
  const Polynomial de = detail::denominator_of(*re);
  const Polynomial dm = detail::denominator_of(*rm);
  const int d = 2 + de.degree() + dm.degree();

  // M = -D_e [k x] D_m (1 - chi_m) [k x] + mu0 eps0 s^2 D_m D_e (1 + chi_e)
  const Tensor3 kx = cross_matrix(op.k);
  detail::MatrixPolynomial M(d + 1, Tensor3::Zero());
  {
    const auto nm = detail::cleared(*rm, -1.0);
    for (std::size_t i = 0; i < nm.size(); ++i) {
      detail::MatrixPolynomial part;
      detail::accumulate(part, de, -kx * nm[i] * kx);
      for (std::size_t j = 0; j < part.size(); ++j) M.at(i + j) += part[j];
    }
    const auto ne = detail::cleared(*re, 1.0);
    const double me = op.consts.mu0 * op.consts.eps0;
    for (std::size_t i = 0; i < ne.size(); ++i) {
      detail::MatrixPolynomial part;
      detail::accumulate(part, dm, me * ne[i]);
      for (std::size_t j = 0; j < part.size(); ++j) M.at(i + j + 2) += part[j];
    }
  }

  // balance the end coefficients (geometric mean of the root magnitudes)
  double r = 1.0;
  {
    const double n0 = M.front().norm(), nd = M.back().norm();
    if (n0 > 0.0 && nd > 0.0) r = std::pow(n0 / nd, 1.0 / d);
    else {
      for (std::size_t i = 0; i < M.size(); ++i) {
        if (M[i].norm() > 0.0) {
          r = std::pow(M[i].norm() / nd, 1.0 / double(d - int(i)));
          break;
        }
      }
    }
  }
  // scaled coefficients of M(r u)
  double rp = 1.0;
  for (auto &c : M) {
    c *= rp;
    rp *= r;
  }
  // leading block must be invertible (1 + chi_e(inf) non-singular)
  const Eigen::FullPivLU<Tensor3> lead(M[d]);
  if (!lead.isInvertible()) {
    throw Error(Errc::SingularAtDispersion, "leading coefficient singular");
  }
  Eigen::MatrixXd comp = Eigen::MatrixXd::Zero(3 * d, 3 * d);
  for (int b = 0; b + 1 < d; ++b) {
    comp.block<3, 3>(3 * b, 3 * (b + 1)) = Tensor3::Identity();
  }
  const Tensor3 inv = lead.inverse();
  for (int b = 0; b < d; ++b) {
    comp.block<3, 3>(3 * (d - 1), 3 * b) = -inv * M[b];
  }
  Eigen::EigenSolver<Eigen::MatrixXd> solver(comp, false);
  if (solver.info() != Eigen::Success) {
    throw Error(Errc::InvalidArgument, "block companion eigensolver failed");
  }
  DispersionPoles out;
  for (int i = 0; i < 3 * d; ++i) out.lambda_roots.push_back(r * solver.eigenvalues()(i));
  // Lambda(0) k = 0, so det M has a double root at s = 0 (sixfold at k = 0)
  // that the companion splits at the sqrt(eps) level
  {
    auto &roots = out.lambda_roots;
    std::sort(roots.begin(), roots.end(),
              [](cplx a, cplx b) { return std::abs(a) < std::abs(b); });
    const std::size_t zeros = op.k.isZero(0.0) ? 6 : 2;
    for (std::size_t i = 0; i < zeros && i < roots.size(); ++i) {
      if (std::abs(roots[i]) <= 1e-5 * r) roots[i] = 0.0;
    }
  }
  out.magnetic = polynomial_roots(dm);
  double scale = 0.0;
  for (const cplx p : out.candidates()) scale = std::max(scale, std::abs(p));
  out.scale = scale > 0.0 ? scale : 1.0;
  return out;
}

enum class Branch { Forward, Backward };

inline double branch_sign(Branch b) { return b == Branch::Forward ? 1.0 : -1.0; }

/// Bracket of the photon kernel: (i s +- w) 1 +- w kx^ chi_m(s) kx^.
inline CTensor3 eta_source(const LambdaOperator &op, const WaveMode &mode, cplx s,
                           Branch b) {
  const double sg = branch_sign(b);
  const CTensor3 chim = chi_laplace(op.chi_m, s);
  return (cplx(0.0, 1.0) * s + sg * mode.omega) * CTensor3::Identity() +
         sg * mode.omega * double_epsilon_contract<cplx>(mode.khat, chim);
}

struct KernelSeries {
  std::vector<double> t;
  std::vector<CTensor3> values;
};

/// Evolution kernels of one mode on a t >= 0 grid. Backward-branch series
/// hold the kernels at -t.
struct ModeKernels {
  WaveMode mode;
  KernelSeries eta_plus, eta_minus;
  std::vector<std::size_t> q_nodes; // spectrum indices carried below
  std::vector<KernelSeries> xi_plus, xi_minus, zeta_plus, zeta_minus;
};

using KernelSet = std::vector<ModeKernels>;

struct KernelOptions {
  LaplaceMethod method = LaplaceMethod::Residue;
  ResidueOptions residue;
  TalbotOptions talbot;
  /// Oscillation bound for the Talbot path when the poles are unknown
  /// (non-rational models); 0 picks 2 * max(omega_n, omega_q).
  double talbot_max_imag = 0.0;
};

namespace detail {

// Laurent data of Lambda^-1 around each pole cluster; the principal part of
// Lambda^-1 * phi for a scalar phi analytic at the cluster follows from the
// Taylor coefficients of phi.
struct InverseLaurent {
  ResidueExpansion<CTensor3> expansion;
  std::vector<double> radius;
};

inline InverseLaurent lambda_inverse_laurent(const LambdaOperator &op,
                                             const DispersionPoles &poles,
                                             const ResidueOptions &opt) {
  InverseLaurent out;
  out.expansion = residue_expansion(
      [&](cplx s) { return invert_lambda(op, s); }, poles.lambda_roots,
      CTensor3(CTensor3::Zero()), opt);
  for (std::size_t a = 0; a < out.expansion.terms.size(); ++a) {
    double dmin = std::numeric_limits<double>::infinity();
    for (std::size_t b = 0; b < out.expansion.terms.size(); ++b) {
      if (b != a) {
        dmin = std::min(dmin, std::abs(out.expansion.terms[a].pole -
                                       out.expansion.terms[b].pole));
      }
    }
    out.radius.push_back(dmin);
  }
  return out;
}

// Taylor coefficients of s^power / (s + a) at p, orders 0..n-1.
inline std::vector<cplx> taylor_rational(cplx p, cplx a, int power, int n) {
  std::vector<cplx> num(n, 0.0);
  // (p + h)^power
  for (int j = 0; j <= power && j < n; ++j) {
    double binom = 1.0;
    for (int i = 0; i < j; ++i) binom = binom * (power - i) / (i + 1);
    num[j] = binom * std::pow(p, power - j);
  }
  std::vector<cplx> inv(n);
  const cplx q = p + a;
  cplx term = 1.0 / q;
  for (int j = 0; j < n; ++j) {
    inv[j] = term;
    term *= -1.0 / q;
  }
  std::vector<cplx> out(n, 0.0);
  for (int i = 0; i < n; ++i)
    for (int j = 0; i + j < n; ++j) out[i + j] += num[i] * inv[j];
  return out;
}

// L^-1{ Lambda^-1(s) s^power / (s + a) }(t) from the cached Laurent data,
// plus the simple pole at s = -a.
inline ResidueExpansion<CTensor3>
medium_kernel_expansion(const LambdaOperator &op, const InverseLaurent &inv,
                        int power, cplx a) {
  ResidueExpansion<CTensor3> out;
  out.zero = CTensor3::Zero();
  for (const auto &term : inv.expansion.terms) {
    const int order = int(term.laurent.size());
    const auto phi = taylor_rational(term.pole, a, power, order);
    typename ResidueExpansion<CTensor3>::Term t{term.pole, {}};
    t.laurent.assign(order, CTensor3::Zero());
    for (int l = 0; l < order; ++l)
      for (int j = 0; l + j < order; ++j) t.laurent[l] += term.laurent[l + j] * phi[j];
    out.terms.push_back(std::move(t));
  }
  const cplx p = -a;
  out.terms.push_back({p, {invert_lambda(op, p) * std::pow(p, power)}});
  return out;
}

inline bool near_cluster(const InverseLaurent &inv, cplx p) {
  for (std::size_t a = 0; a < inv.expansion.terms.size(); ++a) {
    // the Taylor product is exact off the pole but loses digits as the
    // extra pole closes in
    const double rho = std::isfinite(inv.radius[a]) ? 0.4 * inv.radius[a] : 1.0;
    if (std::abs(inv.expansion.terms[a].pole - p) <= 1e-2 * rho) {
      return true;
    }
  }
  return false;
}

template <class F>
CTensor3 talbot_matrix(F &&func, double t, const TalbotOptions &opt) {
  if (t > 0.0) return talbot_inverse(func, t, opt, CTensor3(CTensor3::Zero()));
  // initial value theorem: f(0+) = lim s F(s); s F(s) = f(0) + a / s + ...,
  // so one Richardson step removes the 1/s term
  const double s = 1e6 * std::max({1.0, std::abs(opt.max_imag)});
  const CTensor3 g1 = s * func(cplx(s, 0.0));
  const CTensor3 g2 = (2.0 * s) * func(cplx(2.0 * s, 0.0));
  return 2.0 * g2 - g1;
}

} // namespace detail

/// Precomputed per-mode kernel machinery; evaluates eta, xi, zeta at any t.
class KernelEngine {
public:
  KernelEngine(LambdaOperator op, const WaveMode &mode, KernelOptions opt = {})
      : op_(std::move(op)), mode_(mode), opt_(std::move(opt)) {
    op_.k = mode.k;
    poles_ = dispersion_poles(op_);
    if (opt_.method == LaplaceMethod::Residue) {
      if (!poles_) {
        throw Error(Errc::DegreeMismatch,
                    "residue path needs rational susceptibilities; use talbot");
      }
      inverse_ = detail::lambda_inverse_laurent(op_, *poles_, opt_.residue);
      for (const Branch b : {Branch::Forward, Branch::Backward}) {
        const auto cand = poles_->candidates();
        eta_[int(b)] = residue_expansion(
            [&](cplx s) {
              return CTensor3(invert_lambda(op_, s) * eta_source(op_, mode_, s, b));
            },
            cand, CTensor3(CTensor3::Zero()), opt_.residue);
      }
    }
    if (poles_) {
      for (const cplx p : poles_->candidates()) {
        max_imag_ = std::max(max_imag_, std::abs(p.imag()));
        max_real_ = std::max(max_real_, p.real());
      }
    }
  }

  const std::optional<DispersionPoles> &poles() const { return poles_; }
  const LambdaOperator &op() const { return op_; }

  /// Kernel value for t >= 0; backward branch yields eta^-(-t).
  CTensor3 eta(double t, Branch b) const {
    if (opt_.method == LaplaceMethod::Residue) return eta_[int(b)](t);
    return detail::talbot_matrix(
        [&](cplx s) {
          return CTensor3(invert_lambda(op_, s) * eta_source(op_, mode_, s, b));
        },
        t, talbot(0.0));
  }

  /// L^-1{Lambda^-1 s^2 / (s +- i w_q)}(t), before the coupling factor.
  CTensor3 xi_base(double omega_q, double t, Branch b) const {
    return medium_base(2, omega_q, t, b);
  }
  /// L^-1{Lambda^-1 s / (s +- i w_q)}(t), before [k x] g.
  CTensor3 zeta_base(double omega_q, double t, Branch b) const {
    return medium_base(1, omega_q, t, b);
  }

  /// Residue expansion of the medium kernel (rational models).
  ResidueExpansion<CTensor3> medium_expansion(int power, double omega_q,
                                              Branch b) const {
    const cplx a = cplx(0.0, branch_sign(b) * omega_q);
    if (!inverse_.expansion.terms.empty() && !detail::near_cluster(inverse_, -a)) {
      return detail::medium_kernel_expansion(op_, inverse_, power, a);
    }
    std::vector<cplx> cand = poles_->lambda_roots;
    cand.push_back(-a);
    return residue_expansion(
        [&](cplx s) {
          return CTensor3(invert_lambda(op_, s) * (std::pow(s, power) / (s + a)));
        },
        cand, CTensor3(CTensor3::Zero()), opt_.residue);
  }

private:
  TalbotOptions talbot(double omega_q) const {
    TalbotOptions t = opt_.talbot;
    if (poles_) {
      t.max_imag = std::max(max_imag_, omega_q);
      t.max_real = max_real_;
    } else {
      t.max_imag = opt_.talbot_max_imag > 0.0
                       ? opt_.talbot_max_imag
                       : 2.0 * std::max(mode_.omega, omega_q);
      t.max_real = 0.0;
    }
    return t;
  }

  CTensor3 medium_base(int power, double omega_q, double t, Branch b) const {
    const cplx a = cplx(0.0, branch_sign(b) * omega_q);
    if (opt_.method == LaplaceMethod::Residue) {
      return medium_expansion(power, omega_q, b)(t);
    }
    return detail::talbot_matrix(
        [&](cplx s) {
          return CTensor3(invert_lambda(op_, s) * (std::pow(s, power) / (s + a)));
        },
        t, talbot(omega_q));
  }

  LambdaOperator op_;
  WaveMode mode_;
  KernelOptions opt_;
  std::optional<DispersionPoles> poles_;
  detail::InverseLaurent inverse_;
  std::array<ResidueExpansion<CTensor3>, 2> eta_;
  double max_imag_ = 0.0;
  double max_real_ = 0.0;
};

/// Kernels of one mode on t >= 0 for the selected spectrum nodes. The xi and
/// zeta series include the coupling factors of the spectrum (factorized on
/// the fly with the canonical root when needed).
inline ModeKernels compute_kernels(const LambdaOperator &op, const WaveMode &mode,
                                   const CouplingSpectrum &spectrum,
                                   const std::vector<std::size_t> &q_nodes,
                                   const std::vector<double> &t_grid,
                                   const KernelOptions &opt = {}) {
  for (const double t : t_grid) {
    if (t < 0.0) throw Error(Errc::InvalidArgument, "kernel grid must be t >= 0");
  }
  KernelEngine engine(op, mode, opt);
  ModeKernels out;
  out.mode = mode;
  out.eta_plus.t = out.eta_minus.t = t_grid;
  for (const double t : t_grid) {
    out.eta_plus.values.push_back(engine.eta(t, Branch::Forward));
    out.eta_minus.values.push_back(engine.eta(t, Branch::Backward));
  }
  out.q_nodes = q_nodes;
  const CTensor3 kx = cross_matrix(mode.k).cast<cplx>();
  for (const std::size_t q : q_nodes) {
    if (q >= spectrum.size()) {
      throw Error(Errc::IncompatibleGrid, "spectrum node index out of range");
    }
    const double wq = spectrum.omega[q];
    const Tensor3 f = spectrum.factorized() ? spectrum.factor_f[q] : psd_sqrt(spectrum.ffT[q]);
    const Tensor3 g = spectrum.factorized() ? spectrum.factor_g[q] : psd_sqrt(spectrum.ggT[q]);
    const CTensor3 fc = f.cast<cplx>();
    const CTensor3 kg = kx * g.cast<cplx>();
    KernelSeries xp{t_grid, {}}, xm{t_grid, {}}, zp{t_grid, {}}, zm{t_grid, {}};
    const bool zf = f.isZero(0.0), zg = g.isZero(0.0);
    auto fill = [&](KernelSeries &ks, int power, Branch b, const CTensor3 &right,
                    bool zero) {
      if (zero) {
        ks.values.assign(t_grid.size(), CTensor3::Zero());
        return;
      }
      if (opt.method == LaplaceMethod::Residue) {
        const auto ex = engine.medium_expansion(power, wq, b);
        for (const double t : t_grid) ks.values.push_back(ex(t) * right);
      } else {
        for (const double t : t_grid) {
          ks.values.push_back((power == 2 ? engine.xi_base(wq, t, b)
                                          : engine.zeta_base(wq, t, b)) *
                              right);
        }
      }
    };
    fill(xp, 2, Branch::Forward, fc, zf);
    fill(xm, 2, Branch::Backward, fc, zf);
    fill(zp, 1, Branch::Forward, kg, zg);
    fill(zm, 1, Branch::Backward, kg, zg);
    out.xi_plus.push_back(std::move(xp));
    out.xi_minus.push_back(std::move(xm));
    out.zeta_plus.push_back(std::move(zp));
    out.zeta_minus.push_back(std::move(zm));
  }
  return out;
}

/// Coherent amplitudes of one mode. D0/B0 override the fields implied by the
/// photon amplitudes.
struct ModeInitial {
  std::array<cplx, 2> alpha{0.0, 0.0};
  std::optional<CVec3> D0;
  std::optional<CVec3> B0;
};

struct MediumAmplitude {
  std::size_t mode = 0; // index into the mode list
  int nu = 0;           // 0..2
  std::size_t q = 0;    // spectrum node
  cplx delta = 0.0;     // E-field branch
  cplx beta = 0.0;      // M-field branch
};

struct InitialState {
  std::map<std::size_t, ModeInitial> modes;
  std::vector<MediumAmplitude> medium;
};

/// q-measure 4 pi w^2 / c^3 times trapezoid weights on the spectrum grid.
inline std::vector<double> trapezoid_measure(const std::vector<double> &omega,
                                             const PhysicalConstants &k) {
  const std::size_t n = omega.size();
  std::vector<double> w(n, 0.0);
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double h = 0.5 * (omega[i + 1] - omega[i]);
    w[i] += h;
    w[i + 1] += h;
  }
  const double c3 = k.c * k.c * k.c;
  for (std::size_t i = 0; i < n; ++i) {
    w[i] *= 4.0 * std::numbers::pi * omega[i] * omega[i] / c3;
  }
  return w;
}

/// Fourier coefficients (of e^{ik.r}/sqrt V) of D(0) and B(0) carried by the
/// annihilation amplitudes of a mode.
inline CVec3 initial_D(const WaveMode &m, const ModeInitial &a,
                       const PhysicalConstants &k) {
  if (a.D0) return *a.D0;
  const cplx pre = cplx(0.0, k.eps0 * std::sqrt(k.hbar * m.omega / (2.0 * k.eps0)));
  return pre * (a.alpha[0] * m.e[0].cast<cplx>() + a.alpha[1] * m.e[1].cast<cplx>());
}

inline CVec3 initial_B(const WaveMode &m, const ModeInitial &a,
                       const PhysicalConstants &k) {
  if (a.B0) return *a.B0;
  const double pre = std::sqrt(k.hbar / (2.0 * k.eps0 * m.omega));
  const CVec3 A = pre * (a.alpha[0] * m.e[0].cast<cplx>() + a.alpha[1] * m.e[1].cast<cplx>());
  return cplx(0.0, 1.0) * cross(m.k.cast<cplx>(), A);
}

/// Laplace-domain source of one mode:
///   +-ik x B0 - mu0 s^2 P_N(s) -+ mu0 s ik x M_N(s) -+ ik x chi_m(s) B0 + mu0 s D0,
/// with the noise terms built from the medium amplitudes of this mode.
inline CVec3 noise_current(const LambdaOperator &op, const WaveMode &mode,
                           std::size_t mode_index, cplx s, const InitialState &init,
                           const CouplingSpectrum &spectrum, Branch b) {
  const auto &k = op.consts;
  const double sg = branch_sign(b);
  const cplx I(0.0, 1.0);
  const CVec3 kc = mode.k.cast<cplx>();
  CVec3 D0 = CVec3::Zero(), B0 = CVec3::Zero();
  if (auto it = init.modes.find(mode_index); it != init.modes.end()) {
    D0 = initial_D(mode, it->second, k);
    B0 = initial_B(mode, it->second, k);
  }
  CVec3 PN = CVec3::Zero(), MN = CVec3::Zero();
  const auto w = trapezoid_measure(spectrum.omega, k);
  for (const auto &amp : init.medium) {
    if (amp.mode != mode_index) continue;
    const double wq = spectrum.omega.at(amp.q);
    const Tensor3 f = spectrum.factorized() ? spectrum.factor_f[amp.q] : psd_sqrt(spectrum.ffT[amp.q]);
    const Tensor3 g = spectrum.factorized() ? spectrum.factor_g[amp.q] : psd_sqrt(spectrum.ggT[amp.q]);
    const cplx lap = 1.0 / (s + sg * I * wq);
    PN += w[amp.q] * lap * amp.delta * (f * mode.v[amp.nu]).cast<cplx>();
    MN += w[amp.q] * lap * I * amp.beta * (g * mode.s[amp.nu]).cast<cplx>();
  }
  const CTensor3 chim = chi_laplace(op.chi_m, s);
  return sg * I * cross(kc, B0) - k.mu0 * s * s * PN - sg * k.mu0 * s * I * cross(kc, MN) -
         sg * I * cross(kc, CVec3(chim * B0)) + k.mu0 * s * D0;
}

struct FieldSeries {
  std::vector<double> t;
  std::vector<Vec3> r;
  std::vector<Vec3> E; // index it * r.size() + ir
};

/// <E(r, t)> on the (r, t) grid from the kernels of every excited mode;
/// t < 0 uses the backward-branch kernels at |t|. Each kernel set must carry
/// a t grid containing every |t| requested.
inline FieldSeries evolve_field_expectation(const std::vector<WaveMode> &modes,
                                            const KernelSet &kernels,
                                            const InitialState &init,
                                            const CouplingSpectrum &spectrum,
                                            const std::vector<Vec3> &points,
                                            const std::vector<double> &times,
                                            const PhysicalConstants &k,
                                            double volume) {
  FieldSeries out;
  out.t = times;
  out.r = points;
  out.E.assign(times.size() * points.size(), Vec3::Zero());
  const double sqrtV = std::sqrt(volume);
  const auto meas = spectrum.omega.empty() ? std::vector<double>{}
                                           : trapezoid_measure(spectrum.omega, k);
  auto find_kernels = [&](std::size_t mi) -> const ModeKernels & {
    for (const auto &mk : kernels) {
      if (mk.mode.n == modes[mi].n) return mk;
    }
    std::ostringstream msg;
    msg << "no kernels for mode (" << modes[mi].n[0] << "," << modes[mi].n[1]
        << "," << modes[mi].n[2] << ")";
    throw Error(Errc::MissingKernel, msg.str());
  };
  auto time_index = [](const KernelSeries &ks, double t) {
    // tolerance follows the grid's own scale (SI times are ~1e-15)
    double scale = std::abs(t);
    for (const double u : ks.t) scale = std::max(scale, std::abs(u));
    for (std::size_t i = 0; i < ks.t.size(); ++i) {
      if (std::abs(ks.t[i] - t) <= 1e-12 * scale) return i;
    }
    std::ostringstream msg;
    msg << "kernel grid lacks t = " << t;
    throw Error(Errc::MissingKernel, msg.str());
  };
  auto q_index = [](const ModeKernels &mk, std::size_t q) {
    for (std::size_t i = 0; i < mk.q_nodes.size(); ++i) {
      if (mk.q_nodes[i] == q) return i;
    }
    throw Error(Errc::MissingKernel, "kernels lack a spectrum node with amplitude");
  };

  // modes that carry amplitude
  std::vector<std::size_t> active;
  for (const auto &[mi, a] : init.modes) {
    if (a.alpha[0] != 0.0 || a.alpha[1] != 0.0) active.push_back(mi);
  }
  for (const auto &amp : init.medium) {
    if (amp.delta != 0.0 || amp.beta != 0.0) active.push_back(amp.mode);
  }
  std::sort(active.begin(), active.end());
  active.erase(std::unique(active.begin(), active.end()), active.end());

  for (const std::size_t mi : active) {
    if (mi >= modes.size()) throw Error(Errc::InvalidArgument, "mode index out of range");
    const WaveMode &m = modes[mi];
    const ModeKernels &mk = find_kernels(mi);
    const double pref = std::sqrt(k.hbar * m.omega / (2.0 * k.eps0 * volume)) / (k.c * k.c);
    CVec3 pol = CVec3::Zero();
    if (auto it = init.modes.find(mi); it != init.modes.end()) {
      pol = it->second.alpha[0] * m.e[0].cast<cplx>() +
            it->second.alpha[1] * m.e[1].cast<cplx>();
    }
    for (std::size_t it = 0; it < times.size(); ++it) {
      const double t = times[it];
      const bool fwd = t >= 0.0;
      const KernelSeries &eta = fwd ? mk.eta_plus : mk.eta_minus;
      const std::size_t ti = time_index(eta, std::abs(t));
      CVec3 amp = pref * (eta.values[ti] * pol);
      for (const auto &ma : init.medium) {
        if (ma.mode != mi) continue;
        const std::size_t qi = q_index(mk, ma.q);
        const double wq = meas.at(ma.q);
        const KernelSeries &xi = fwd ? mk.xi_plus[qi] : mk.xi_minus[qi];
        const KernelSeries &ze = fwd ? mk.zeta_plus[qi] : mk.zeta_minus[qi];
        amp -= (k.mu0 / sqrtV) * wq * ma.delta * (xi.values[ti] * m.v[ma.nu].cast<cplx>());
        amp += (fwd ? 1.0 : -1.0) * (k.mu0 / sqrtV) * wq * ma.beta *
               (ze.values[ti] * m.s[ma.nu].cast<cplx>());
      }
      for (std::size_t ir = 0; ir < points.size(); ++ir) {
        const cplx phase = std::exp(cplx(0.0, m.k.dot(points[ir])));
        out.E[it * points.size() + ir] += 2.0 * (amp * phase).real();
      }
    }
  }
  return out;
}

} // namespace maqed
