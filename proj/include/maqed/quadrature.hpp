#pragma once

// Quadrature on sampled spectra: natural cubic splines, a Filon-type sine
// transform, and product-integration rules for principal-value and Cauchy
// integrals of piecewise-linear data.

#include "maqed/error.hpp"
#include "maqed/tensor.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <span>
#include <sstream>
#include <vector>

namespace maqed {

inline std::vector<double> log_grid(double lo, double hi, std::size_t n) {
  if (!(lo > 0.0) || !(hi > lo) || n < 2) {
    throw Error(Errc::InvalidArgument, "log_grid needs 0 < lo < hi and n >= 2");
  }
  std::vector<double> g(n);
  const double a = std::log(lo), b = std::log(hi);
  for (std::size_t i = 0; i < n; ++i) {
    g[i] = std::exp(a + (b - a) * double(i) / double(n - 1));
  }
  g.front() = lo;
  g.back() = hi;
  return g;
}

inline std::vector<double> linear_grid(double lo, double hi, std::size_t n) {
  if (n < 2) return {lo};
  std::vector<double> g(n);
  for (std::size_t i = 0; i < n; ++i) {
    g[i] = lo + (hi - lo) * double(i) / double(n - 1);
  }
  return g;
}

inline void require_increasing(std::span<const double> x, const char *what) {
  for (std::size_t i = 1; i < x.size(); ++i) {
    if (!(x[i] > x[i - 1])) {
      std::ostringstream msg;
      msg << what << ": grid not strictly increasing at node " << i;
      throw Error(Errc::IncompatibleGrid, msg.str());
    }
  }
}

namespace detail {
// 8-point Gauss-Legendre on [-1, 1]
inline constexpr std::array<double, 8> gl8_x = {
    -0.9602898564975363, -0.7966664774136267, -0.5255324099163290,
    -0.1834346424956498, 0.1834346424956498,  0.5255324099163290,
    0.7966664774136267,  0.9602898564975363};
inline constexpr std::array<double, 8> gl8_w = {
    0.1012285362903763, 0.2223810344533745, 0.3137066458778873,
    0.3626837833783620, 0.3626837833783620, 0.3137066458778873,
    0.2223810344533745, 0.1012285362903763};
} // namespace detail

/// Natural cubic spline through (x_i, y_i) for any value type with vector
/// space operations (double, Eigen matrices).
template <class T> class CubicSpline {
public:
  CubicSpline() = default;
  CubicSpline(std::vector<double> x, std::vector<T> y)
      : x_(std::move(x)), y_(std::move(y)) {
    if (x_.size() != y_.size() || x_.size() < 2) {
      throw Error(Errc::IncompatibleGrid, "spline needs >= 2 matching nodes");
    }
    require_increasing(x_, "spline");
    const std::size_t n = x_.size();
    m_.assign(n, y_[0] * 0.0);
    if (n == 2) return;
    // Thomas algorithm for the second derivatives, natural end conditions
    std::vector<double> cp(n, 0.0);
    std::vector<T> dp(n, y_[0] * 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i) {
      const double h0 = x_[i] - x_[i - 1], h1 = x_[i + 1] - x_[i];
      const double a = h0 / 6.0, b = (h0 + h1) / 3.0, c = h1 / 6.0;
      const T d = (y_[i + 1] - y_[i]) / h1 - (y_[i] - y_[i - 1]) / h0;
      const double denom = b - a * cp[i - 1];
      cp[i] = c / denom;
      dp[i] = (d - dp[i - 1] * a) / denom;
    }
    for (std::size_t i = n - 2; i >= 1; --i) {
      m_[i] = dp[i] - m_[i + 1] * cp[i];
    }
  }

  const std::vector<double> &x() const { return x_; }
  const std::vector<T> &y() const { return y_; }

  /// Power-basis coefficients of segment i in u = x - x_i.
  std::array<T, 4> segment(std::size_t i) const {
    const double h = x_[i + 1] - x_[i];
    const T a = y_[i];
    const T b = (y_[i + 1] - y_[i]) / h - (m_[i] * 2.0 + m_[i + 1]) * (h / 6.0);
    const T c = m_[i] * 0.5;
    const T d = (m_[i + 1] - m_[i]) / (6.0 * h);
    return {a, b, c, d};
  }

  T operator()(double xv) const {
    if (xv <= x_.front()) return y_.front();
    if (xv >= x_.back()) return y_.back();
    const std::size_t i =
        std::upper_bound(x_.begin(), x_.end(), xv) - x_.begin() - 1;
    const auto s = segment(i);
    const double u = xv - x_[i];
    return s[0] + (s[1] + (s[2] + s[3] * u) * u) * u;
  }

private:
  std::vector<double> x_;
  std::vector<T> y_;
  std::vector<T> m_;
};

enum class CesaroMode { Off, Auto, On };

struct SineTransformOptions {
  /// Relative tail tolerance against (2/pi) * integral |h|.
  double tail_tol = 1e-2;
  CesaroMode cesaro = CesaroMode::Auto;
  /// Plain tail estimate (relative) above which Auto switches averaging on.
  double cesaro_trigger = 1e-6;
};

template <class T> struct SineTransformResult {
  T value;
  double tail_estimate = 0.0; // relative
  bool cesaro = false;
};

/// Integral of h(w) sin(w t) over (0, inf) for h sampled on an increasing
/// positive grid. h is a natural cubic spline on the grid, linear from
/// h(0) = 0 to the first node, and zero beyond the last node. Each segment
/// is integrated exactly (integration by parts of the cubic) when it spans
/// more than a radian of the oscillation, by 8-point Gauss-Legendre
/// otherwise.
///
/// Slowly decaying spectra (h ~ 1/w) only converge conditionally; Cesaro
/// averaging of the partial integrals over the last decade of the grid
/// removes the leading oscillating tail.
template <class T>
SineTransformResult<T> sine_transform(const CubicSpline<T> &h, double t,
                                      const SineTransformOptions &opt = {}) {
  const auto &x = h.x();
  const auto &y = h.y();
  const T zero = y[0] * 0.0;
  const std::size_t n = x.size();
  auto norm = [](const T &v) {
    if constexpr (std::is_arithmetic_v<T>) return std::abs(v);
    else return v.cwiseAbs().maxCoeff();
  };
  SineTransformResult<T> out{zero, 0.0, false};
  if (t == 0.0) return out;

  std::vector<T> partial(n, zero);
  {
    // prefix [0, x0], linear
    const double x0 = x[0];
    const T slope = y[0] / x0;
    T acc = zero;
    if (t * x0 < 1.0) {
      for (int k = 0; k < 8; ++k) {
        const double u = 0.5 * x0 * (detail::gl8_x[k] + 1.0);
        acc += slope * (0.5 * x0 * detail::gl8_w[k] * u * std::sin(t * u));
      }
    } else {
      acc = slope * (std::sin(t * x0) / (t * t) - x0 * std::cos(t * x0) / t);
    }
    partial[0] = acc;
  }
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double hseg = x[i + 1] - x[i];
    const auto c = h.segment(i);
    T acc = zero;
    if (t * hseg < 1.0) {
      for (int k = 0; k < 8; ++k) {
        const double u = 0.5 * hseg * (detail::gl8_x[k] + 1.0);
        const T s = c[0] + (c[1] + (c[2] + c[3] * u) * u) * u;
        acc += s * (0.5 * hseg * detail::gl8_w[k] * std::sin(t * (x[i] + u)));
      }
    } else {
      auto anti = [&](double u) -> T {
        const T s = c[0] + (c[1] + (c[2] + c[3] * u) * u) * u;
        const T s1 = c[1] + (c[2] * 2.0 + c[3] * (3.0 * u)) * u;
        const T s2 = c[2] * 2.0 + c[3] * (6.0 * u);
        const T s3 = c[3] * 6.0;
        const double th = t * (x[i] + u);
        const double cs = std::cos(th), sn = std::sin(th);
        return s * (-cs / t) + s1 * (sn / (t * t)) + s2 * (cs / (t * t * t)) -
               s3 * (sn / (t * t * t * t));
      };
      acc = anti(hseg) - anti(0.0);
    }
    partial[i + 1] = partial[i] + acc;
  }

  // scale for the relative tail test
  double scale = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    scale += 0.5 * (norm(y[i]) + norm(y[i + 1])) * (x[i + 1] - x[i]);
  }
  scale *= 2.0 / std::numbers::pi;
  if (scale == 0.0) return out;

  double env = 0.0;
  const std::size_t tail_nodes = std::max<std::size_t>(2, n / 64);
  for (std::size_t i = n - tail_nodes; i < n; ++i) env = std::max(env, norm(y[i]));
  const double plain = env / std::abs(t) / scale;

  bool use_cesaro = opt.cesaro == CesaroMode::On ||
                    (opt.cesaro == CesaroMode::Auto && plain > opt.cesaro_trigger);
  std::size_t first = n - 1;
  while (first > 0 && x[first - 1] >= 0.1 * x.back()) --first;
  if (first + 2 > n) use_cesaro = false;

  if (!use_cesaro) {
    out.value = partial.back();
    out.tail_estimate = plain;
  } else {
    T avg = zero;
    for (std::size_t i = first; i + 1 < n; ++i) {
      avg += (partial[i] + partial[i + 1]) * (0.5 * (x[i + 1] - x[i]));
    }
    const double width = x.back() - x[first];
    out.value = avg / width;
    out.tail_estimate = env / (t * t * width) / scale;
    out.cesaro = true;
  }
  if (out.tail_estimate > opt.tail_tol) {
    std::ostringstream msg;
    msg << "estimated relative tail " << out.tail_estimate << " at t = " << t
        << " exceeds " << opt.tail_tol << " (grid ends at " << x.back() << ")";
    throw Error(Errc::TailTruncation, msg.str());
  }
  return out;
}

/// Principal value of (2/pi) P int_0^inf w' g(w') / (w'^2 - w^2) dw' for g
/// piecewise linear on the grid (through g(0) = 0, zero past the last
/// node). This is the Kramers-Kronig map from Im chi to Re chi.
/// Log singularities at w are grouped node by node so that w may coincide
/// with a grid node.
template <class T>
T kramers_kronig_real(std::span<const double> x, std::span<const T> g,
                      double w) {
  const std::size_t n = x.size();
  const T zero = g[0] * 0.0;
  // nodes including the origin
  auto node = [&](std::size_t j) { return j == 0 ? 0.0 : x[j - 1]; };
  auto value = [&](std::size_t j) { return j == 0 ? zero : T(g[j - 1]); };
  const std::size_t m = n + 1;
  T acc = zero;
  // 1/(x - a) kernel for a = +w and a = -w, each with weight 1/2
  for (const double a : {w, -w}) {
    // linear pieces L_j(x) = alpha_j + beta_j x on [node j, node j+1]
    std::vector<T> at_a(m - 1, zero);
    for (std::size_t j = 0; j + 1 < m; ++j) {
      const double x0 = node(j), x1 = node(j + 1);
      const T beta = (value(j + 1) - value(j)) / (x1 - x0);
      acc += beta * (x1 - x0);
      at_a[j] = value(j) + beta * (a - x0);
    }
    for (std::size_t k = 0; k < m; ++k) {
      T coeff = zero;
      if (k > 0) coeff += at_a[k - 1];
      if (k + 1 < m) coeff -= at_a[k];
      const double d = std::abs(node(k) - a);
      if (d == 0.0) continue; // coefficient vanishes by continuity
      acc += coeff * std::log(d);
    }
  }
  return acc * (1.0 / std::numbers::pi);
}

/// (2/pi) int_0^inf w' g(w') / (w'^2 + s^2) dw' for complex s with
/// Re s > 0, g piecewise linear as above. This is chi(s) rebuilt from its
/// absorptive part.
inline CTensor3 cauchy_laplace(std::span<const double> x,
                               std::span<const Tensor3> g, cplx s) {
  const std::size_t m = x.size() + 1;
  auto node = [&](std::size_t j) { return j == 0 ? 0.0 : x[j - 1]; };
  auto value = [&](std::size_t j) -> CTensor3 {
    return j == 0 ? CTensor3::Zero() : CTensor3(g[j - 1].cast<cplx>());
  };
  CTensor3 acc = CTensor3::Zero();
  const cplx is = cplx(0.0, 1.0) * s;
  for (const cplx a : {is, -is}) {
    for (std::size_t j = 0; j + 1 < m; ++j) {
      const double x0 = node(j), x1 = node(j + 1);
      const CTensor3 beta = (value(j + 1) - value(j)) / (x1 - x0);
      const CTensor3 at_a = value(j) + beta * (a - x0);
      acc += beta * (x1 - x0) +
             at_a * (std::log(cplx(x1) - a) - std::log(cplx(x0) - a));
    }
  }
  return acc / std::numbers::pi;
}

} // namespace maqed
