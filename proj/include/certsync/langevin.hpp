#pragma once

#include <boost/math/constants/constants.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <cmath>
#include <random>

#include "certsync/pose.hpp"

namespace certsync {

struct LangevinParams {
  Matrix mode;
  Scalar kappa = 0;

  int dim() const { return static_cast<int>(mode.rows()); }
};

namespace detail {

inline constexpr Scalar pi = boost::math::constants::pi<Scalar>();

/// (1/pi) int_0^pi exp(x (cos t - 1)) f(t) dt by adaptive Gauss-Kronrod. The weight is below
/// e^-80 for x (1 - cos t) > 80, so the range is cut there; f must be bounded.
template <class F>
Scalar scaled_circle_integral(Scalar x, F&& f) {
  using boost::math::quadrature::gauss_kronrod;
  auto integrand = [&](Scalar t) { return std::exp(x * (std::cos(t) - 1.0)) * f(t); };
  const Scalar upper = x > 40.0 ? std::acos(1.0 - 80.0 / x) : pi;
  return gauss_kronrod<Scalar, 31>::integrate(integrand, 0.0, upper, 15, 1e-13) / pi;
}

}  // namespace detail

/// e^-x I_0(x), from the integral representation.
inline Scalar bessel_i0_scaled(Scalar x) {
  return detail::scaled_circle_integral(x, [](Scalar) { return 1.0; });
}

/// e^-x I_1(x). Integrating by parts turns the cos t weight into x sin^2 t, which is
/// nonnegative and so free of cancellation for small x.
inline Scalar bessel_i1_scaled(Scalar x) {
  if (x == 0.0) return 0.0;
  return x * detail::scaled_circle_integral(x, [](Scalar t) { return std::sin(t) * std::sin(t); });
}

/// log c_d(kappa), the normalizer of exp(kappa tr(M^T X)) against normalized Haar measure.
inline Scalar langevin_log_normalizer(int d, Scalar kappa) {
  if (d != 2 && d != 3) throw DimensionError("langevin: d must be 2 or 3");
  if (!(kappa >= 0)) throw Error("langevin: kappa must be nonnegative");
  const Scalar x = 2.0 * kappa;
  if (d == 2) return x + std::log(bessel_i0_scaled(x));
  // c_3 = e^kappa (I_0(2 kappa) - I_1(2 kappa)); the difference is integrated directly.
  const Scalar diff = detail::scaled_circle_integral(x, [](Scalar t) { return 1.0 - std::cos(t); });
  return kappa + x + std::log(diff);
}

inline Scalar langevin_log_density(const LangevinParams& p, const Matrix& X) {
  const int d = p.dim();
  if (d != 2 && d != 3) throw DimensionError("langevin: d must be 2 or 3");
  require_dims(X.rows() == d && X.cols() == d, "langevin_log_density: shape mismatch");
  return p.kappa * (p.mode.transpose() * X).trace() - langevin_log_normalizer(d, p.kappa);
}

/// Best-Fisher rejection sampler for the von Mises distribution, result in [-pi, pi).
template <class Rng>
Scalar sample_von_mises(Scalar mu, Scalar lambda, Rng& rng) {
  using detail::pi;
  std::uniform_real_distribution<Scalar> unif(0.0, 1.0);
  auto wrap = [](Scalar a) {
    Scalar w = std::fmod(a + pi, 2.0 * pi);
    if (w < 0) w += 2.0 * pi;
    return w - pi;
  };
  if (lambda < 1e-8) return pi * (2.0 * unif(rng) - 1.0);
  if (lambda > 1e6) {
    std::normal_distribution<Scalar> normal(0.0, 1.0 / std::sqrt(lambda));
    return wrap(mu + normal(rng));
  }
  Scalar s;
  if (lambda < 1e-5) {
    s = 1.0 / lambda + lambda;
  } else {
    const Scalar r = 1.0 + std::sqrt(1.0 + 4.0 * lambda * lambda);
    const Scalar rho = (r - std::sqrt(2.0 * r)) / (2.0 * lambda);
    s = (1.0 + rho * rho) / (2.0 * rho);
  }
  Scalar W;
  while (true) {
    const Scalar z = std::cos(pi * unif(rng));
    W = (1.0 + s * z) / (s + z);
    const Scalar Y = lambda * (s - W);
    const Scalar V = unif(rng);
    if (Y * (2.0 - Y) - V >= 0 || std::log(Y / V) + 1.0 - Y >= 0) break;
  }
  Scalar theta = std::acos(std::clamp(W, Scalar(-1), Scalar(1)));
  if (unif(rng) < 0.5) theta = -theta;
  return wrap(mu + theta);
}

/// Draws X = M P with P a rotation by theta ~ vonMises(0, 2 kappa) about a uniform axis.
template <class Rng>
Matrix sample_langevin(const LangevinParams& p, Rng& rng) {
  const int d = p.dim();
  if (d != 2 && d != 3) throw DimensionError("langevin: d must be 2 or 3");
  const Scalar theta = sample_von_mises(0.0, 2.0 * p.kappa, rng);
  if (d == 2) return p.mode * rotation2d(theta);
  std::normal_distribution<Scalar> normal;
  Eigen::Vector3d axis;
  do {
    axis = Eigen::Vector3d(normal(rng), normal(rng), normal(rng));
  } while (axis.norm() < 1e-12);
  axis.normalize();
  const Matrix P = Eigen::AngleAxisd(theta, axis).toRotationMatrix();
  return p.mode * P;
}

/// Standard deviation of the rotation angle, by quadrature of its density exp(2 kappa cos t).
inline Scalar angular_std_quadrature(Scalar kappa) {
  if (!(kappa >= 0)) throw Error("angular_std: kappa must be nonnegative");
  const Scalar x = 2.0 * kappa;
  const Scalar num = detail::scaled_circle_integral(x, [](Scalar t) { return t * t; });
  const Scalar den = detail::scaled_circle_integral(x, [](Scalar) { return 1.0; });
  return std::sqrt(num / den);
}

inline Scalar angular_std_asymptotic(Scalar kappa) { return 1.0 / std::sqrt(2.0 * kappa); }

inline Scalar angular_std(Scalar kappa) {
  return kappa > 150.0 ? angular_std_asymptotic(kappa) : angular_std_quadrature(kappa);
}

/// Inverse of angular_std by bisection.
inline Scalar kappa_from_angular_std(Scalar target) {
  const Scalar upper = detail::pi / std::sqrt(3.0);
  if (!(target > 0 && target < upper)) throw Error("kappa_from_angular_std: target out of range (0, pi/sqrt 3)");
  Scalar lo = 0, hi = 1;
  while (angular_std(hi) > target) {
    lo = hi;
    hi *= 2;
  }
  for (int it = 0; it < 200 && hi - lo > 1e-13 * hi; ++it) {
    const Scalar mid = 0.5 * (lo + hi);
    if (angular_std(mid) > target)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace certsync
