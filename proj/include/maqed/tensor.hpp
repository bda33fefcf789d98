#pragma once

#include "maqed/error.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <complex>
#include <sstream>

namespace maqed {

using cplx = std::complex<double>;
using Vec3 = Eigen::Vector3d;
using CVec3 = Eigen::Vector3cd;
using Tensor3 = Eigen::Matrix3d;
using CTensor3 = Eigen::Matrix3cd;

enum class UnitSystem { Natural, SI };

constexpr std::string_view to_string(UnitSystem u) {
  return u == UnitSystem::Natural ? "natural" : "SI";
}

/// hbar, eps0, mu0 and c with mu0*eps0*c^2 = 1 held by construction.
struct PhysicalConstants {
  double hbar = 1.0;
  double eps0 = 1.0;
  double mu0 = 1.0;
  double c = 1.0;
  UnitSystem units = UnitSystem::Natural;

  static PhysicalConstants natural() { return {}; }

  /// CODATA 2018. mu0 is derived from eps0 and the exact c so that the
  /// closure relation holds to rounding.
  static PhysicalConstants si() {
    PhysicalConstants k;
    k.hbar = 1.054571817e-34;
    k.eps0 = 8.8541878128e-12;
    k.c = 299792458.0;
    k.mu0 = 1.0 / (k.eps0 * k.c * k.c);
    k.units = UnitSystem::SI;
    return k;
  }

  static PhysicalConstants from(double hbar, double eps0, double mu0,
                                UnitSystem units = UnitSystem::Natural) {
    if (!(hbar > 0) || !(eps0 > 0) || !(mu0 > 0)) {
      throw Error(Errc::InvalidArgument, "physical constants must be positive");
    }
    PhysicalConstants k{hbar, eps0, mu0, 1.0 / std::sqrt(eps0 * mu0), units};
    return k;
  }

  double closure_error() const { return std::abs(mu0 * eps0 * c * c - 1.0); }
};

template <class A, class B>
double relative_frobenius(const Eigen::MatrixBase<A> &a,
                          const Eigen::MatrixBase<B> &b) {
  const double scale = std::max(a.norm(), b.norm());
  return scale == 0.0 ? 0.0 : (a - b).norm() / scale;
}

inline double asymmetry(const Tensor3 &m) {
  const double n = m.norm();
  return n == 0.0 ? 0.0 : (m - m.transpose()).norm() / n;
}

inline bool all_finite(const Tensor3 &m) { return m.allFinite(); }

/// Matrix of the map v -> k x v.
inline Tensor3 cross_matrix(const Vec3 &k) {
  Tensor3 m;
  m << 0.0, -k.z(), k.y(), k.z(), 0.0, -k.x(), -k.y(), k.x(), 0.0;
  return m;
}

/// a x b. Eigen's cross() conjugates complex results, which is not wanted.
inline CVec3 cross(const CVec3 &a, const CVec3 &b) {
  return {a.y() * b.z() - a.z() * b.y(), a.z() * b.x() - a.x() * b.z(),
          a.x() * b.y() - a.y() * b.x()};
}

constexpr int levi_civita(int i, int j, int k) {
  if (i == j || j == k || i == k) return 0;
  return ((i - j) * (j - k) * (k - i)) / 2 > 0 ? 1 : -1;
}

struct SymmetricEigen {
  Vec3 values;   // ascending
  Tensor3 vectors; // columns
};

/// Eigendecomposition of a symmetric 3x3 tensor. The closed-form
/// characteristic-polynomial solver is tried first; if its reconstruction
/// residual is not at rounding level (clustered eigenvalues) the iterative
/// QR solver takes over.
inline SymmetricEigen symmetric_eigen(const Tensor3 &s) {
  const Tensor3 sym = 0.5 * (s + s.transpose());
  const double scale = std::max(sym.norm(), 1e-300);
  Eigen::SelfAdjointEigenSolver<Tensor3> direct;
  direct.computeDirect(sym);
  if (direct.info() == Eigen::Success) {
    const Tensor3 rebuilt = direct.eigenvectors() *
                            direct.eigenvalues().asDiagonal() *
                            direct.eigenvectors().transpose();
    const double ortho =
        (direct.eigenvectors().transpose() * direct.eigenvectors() -
         Tensor3::Identity())
            .norm();
    if ((rebuilt - sym).norm() <= 1e-14 * scale && ortho <= 1e-14) {
      return {direct.eigenvalues(), direct.eigenvectors()};
    }
  }
  Eigen::SelfAdjointEigenSolver<Tensor3> iterative(sym);
  return {iterative.eigenvalues(), iterative.eigenvectors()};
}

/// Unique symmetric positive-semidefinite R with R R^t = S.
///
/// `tol` is relative: the asymmetry bound is tol*|S|_F and eigenvalues in
/// [-tol*max|lambda|, 0) are clamped to zero. Anything more negative is a
/// non-passive input.
inline Tensor3 psd_sqrt(const Tensor3 &s, double tol = 1e-10) {
  if (!s.allFinite()) {
    throw Error(Errc::InvalidArgument, "psd_sqrt: non-finite input");
  }
  const double asym = asymmetry(s);
  if (asym > tol) {
    std::ostringstream msg;
    msg << "relative asymmetry " << asym << " exceeds " << tol;
    throw Error(Errc::NotSymmetric, msg.str());
  }
  const SymmetricEigen eig = symmetric_eigen(s);
  const double lmax = eig.values.cwiseAbs().maxCoeff();
  if (lmax == 0.0) return Tensor3::Zero();
  Vec3 root;
  for (int i = 0; i < 3; ++i) {
    const double l = eig.values(i);
    if (l < -tol * lmax) {
      std::ostringstream msg;
      msg << "eigenvalue " << l << " below -" << tol << "*" << lmax;
      throw Error(Errc::NegativeEigenvalue, msg.str());
    }
    // eigenvalues at round-off level would otherwise surface as sqrt(eps)
    const double floor = 8.0 * std::numeric_limits<double>::epsilon() * lmax;
    root(i) = l <= floor ? 0.0 : std::sqrt(l);
  }
  Tensor3 r = eig.vectors * root.asDiagonal() * eig.vectors.transpose();
  return 0.5 * (r + r.transpose());
}

inline double orthogonality_error(const Tensor3 &a) {
  return (a * a.transpose() - Tensor3::Identity()).norm();
}

/// Right-multiplies a coupling factor by an orthogonal gauge.
inline Tensor3 apply_gauge(const Tensor3 &f, const Tensor3 &gauge,
                           double tol = 1e-10) {
  const double err = orthogonality_error(gauge);
  if (!(err <= tol)) {
    std::ostringstream msg;
    msg << "|A A^t - 1| = " << err;
    throw Error(Errc::NotOrthogonal, msg.str());
  }
  return f * gauge;
}

/// eps_{i mu nu} eps_{alpha beta j} m_{nu alpha} k^mu k^beta, i.e. the
/// matrix of v -> k x (m (k x v)). For m = 1 this is k k^t - |k|^2 1.
template <class Scalar>
Eigen::Matrix<Scalar, 3, 3>
double_epsilon_contract(const Vec3 &k, const Eigen::Matrix<Scalar, 3, 3> &m) {
  const Eigen::Matrix<Scalar, 3, 3> kx = cross_matrix(k).cast<Scalar>();
  return kx * m * kx;
}

} // namespace maqed
