#pragma once

#include <algorithm>
#include <cmath>
#include <limits>

#include "certsync/types.hpp"

namespace certsync {

/// An element (t, R) of SE(d), d in {2, 3}.
struct Pose {
  Vector t;
  Matrix R;

  static Pose identity(int d) { return {Vector::Zero(d), Matrix::Identity(d, d)}; }

  int dim() const { return static_cast<int>(t.size()); }
};

/// (t1, R1) * (t2, R2) = (t1 + R1 t2, R1 R2)
inline Pose compose(const Pose& a, const Pose& b) {
  require_dims(a.dim() == b.dim(), "compose: dimension mismatch");
  return {a.t + a.R * b.t, a.R * b.R};
}

/// (t, R)^-1 = (-R^T t, R^T)
inline Pose inverse(const Pose& a) {
  Matrix Rt = a.R.transpose();
  return {-Rt * a.t, Rt};
}

/// Relative transform a^-1 * b.
inline Pose between(const Pose& a, const Pose& b) { return compose(inverse(a), b); }

/// Counter-clockwise planar rotation.
inline Matrix rotation2d(Scalar theta) {
  Matrix R(2, 2);
  const Scalar c = std::cos(theta), s = std::sin(theta);
  R << c, -s, s, c;
  return R;
}

/// Residual max(||R^T R - I||_F, |det R - 1|).
inline Scalar rotation_residual(const Matrix& R) {
  if (R.rows() != R.cols()) return std::numeric_limits<Scalar>::infinity();
  const Matrix I = Matrix::Identity(R.rows(), R.cols());
  return std::max((R.transpose() * R - I).norm(), std::abs(R.determinant() - 1.0));
}

inline bool is_rotation(const Matrix& R, Scalar tol = 1e-9) { return rotation_residual(R) <= tol; }

/// Geodesic angle of a rotation, in [0, pi].
inline Scalar rotation_angle(const Matrix& R) {
  const Scalar d = static_cast<Scalar>(R.rows());
  // tr R = (d - 2) + 2 cos(theta) and ||R - R^T||_F = 2 sqrt(2) |sin(theta)| for d = 2, 3
  const Scalar c = (R.trace() - (d - 2.0)) / 2.0;
  const Scalar s = (R - R.transpose()).norm() / (2.0 * std::sqrt(2.0));
  return std::atan2(s, c);
}

}  // namespace certsync
