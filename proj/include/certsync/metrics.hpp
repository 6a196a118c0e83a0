#pragma once

#include <cmath>
#include <vector>

#include "certsync/pose.hpp"

namespace certsync {

struct OrbitDistance {
  Scalar distance = 0;
  Matrix G;  ///< minimizer of ||X - G Y||_F
};

namespace detail {

struct AlignmentSvd {
  Matrix U, V;
  Vector sigma;
};

/// SVD of X Y^T with each column pair of (U, V) sign-fixed so that the largest-magnitude
/// entry of the U column is positive.
inline AlignmentSvd alignment_svd(const Matrix& X, const Matrix& Y) {
  require_dims(X.rows() == Y.rows() && X.cols() == Y.cols() && X.cols() % X.rows() == 0,
               "orbit distance: X and Y must both be d x dn");
  Eigen::JacobiSVD<Matrix> svd(X * Y.transpose(), Eigen::ComputeFullU | Eigen::ComputeFullV);
  AlignmentSvd out{svd.matrixU(), svd.matrixV(), svd.singularValues()};
  for (Eigen::Index k = 0; k < out.U.cols(); ++k) {
    Eigen::Index idx;
    out.U.col(k).cwiseAbs().maxCoeff(&idx);
    if (out.U(idx, k) < 0) {
      out.U.col(k) *= -1.0;
      out.V.col(k) *= -1.0;
    }
  }
  return out;
}

/// ||X - G Y||_F. For block-orthogonal inputs this equals sqrt(2 dn - 2 tr(G^T X Y^T)) but
/// avoids the cancellation in that difference when the orbits nearly coincide.
inline Scalar aligned_residual(const Matrix& X, const Matrix& Y, const Matrix& G) { return (X - G * Y).norm(); }

}  // namespace detail

/// Distance between the O(d) orbits of two block-orthogonal d x dn matrices.
inline OrbitDistance orbit_distance_O(const Matrix& X, const Matrix& Y) {
  const auto svd = detail::alignment_svd(X, Y);
  const Matrix G = svd.U * svd.V.transpose();
  return {detail::aligned_residual(X, Y, G), G};
}

/// Distance between the SO(d) orbits of two block-rotation d x dn matrices.
inline OrbitDistance orbit_distance_S(const Matrix& X, const Matrix& Y) {
  const auto svd = detail::alignment_svd(X, Y);
  const Eigen::Index d = X.rows();
  Vector xi = Vector::Ones(d);
  xi[d - 1] = (svd.U * svd.V.transpose()).determinant() < 0 ? -1.0 : 1.0;
  const Matrix G = svd.U * xi.asDiagonal() * svd.V.transpose();
  return {detail::aligned_residual(X, Y, G), G};
}

/// RMS geodesic angle between corresponding blocks, optionally after SO(d) alignment of
/// R_est onto R_true.
inline Scalar angular_rms_error(const Matrix& R_est, const Matrix& R_true, bool aligned) {
  require_dims(R_est.rows() == R_true.rows() && R_est.cols() == R_true.cols(), "angular_rms_error: shape mismatch");
  const Eigen::Index d = R_est.rows(), n = R_est.cols() / d;
  const Matrix G = aligned ? orbit_distance_S(R_true, R_est).G : Matrix::Identity(d, d);
  Scalar sum = 0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Scalar a = rotation_angle((G * R_est.middleCols(d * i, d)).transpose() * R_true.middleCols(d * i, d));
    sum += a * a;
  }
  return n ? std::sqrt(sum / n) : 0.0;
}

/// RMS translation error after rotating the estimate by G and matching centroids. t are d x n.
inline Scalar aligned_translation_rms(const Matrix& t_est, const Matrix& t_true, const Matrix& G) {
  require_dims(t_est.rows() == t_true.rows() && t_est.cols() == t_true.cols(),
               "aligned_translation_rms: shape mismatch");
  if (t_est.cols() == 0) return 0.0;
  Matrix a = G * t_est;
  a.colwise() -= a.rowwise().mean();
  Matrix b = t_true;
  b.colwise() -= b.rowwise().mean();
  return std::sqrt((a - b).squaredNorm() / static_cast<Scalar>(t_est.cols()));
}

/// Stacks rotations of a pose list as d x dn.
inline Matrix stack_rotations(const std::vector<Pose>& poses) {
  if (poses.empty()) return Matrix();
  const int d = poses.front().dim();
  Matrix R(d, static_cast<Eigen::Index>(d * poses.size()));
  for (std::size_t i = 0; i < poses.size(); ++i) R.middleCols(d * i, d) = poses[i].R;
  return R;
}

/// Stacks translations of a pose list as d x n.
inline Matrix stack_translations(const std::vector<Pose>& poses) {
  if (poses.empty()) return Matrix();
  Matrix t(poses.front().dim(), static_cast<Eigen::Index>(poses.size()));
  for (std::size_t i = 0; i < poses.size(); ++i) t.col(i) = poses[i].t;
  return t;
}

struct TrajectoryErrors {
  Scalar d_S = 0;
  Scalar d_O = 0;
  Scalar angular_rms = 0;
  Scalar translation_rms = 0;
};

/// Gauge-invariant comparison of an estimate against ground truth.
inline TrajectoryErrors compare_trajectories(const std::vector<Pose>& est, const std::vector<Pose>& truth) {
  require_dims(est.size() == truth.size(), "compare_trajectories: pose counts differ");
  const Matrix Re = stack_rotations(est), Rt = stack_rotations(truth);
  const auto S = orbit_distance_S(Rt, Re);
  return {S.distance, orbit_distance_O(Rt, Re).distance, angular_rms_error(Re, Rt, true),
          aligned_translation_rms(stack_translations(est), stack_translations(truth), S.G)};
}

}  // namespace certsync
