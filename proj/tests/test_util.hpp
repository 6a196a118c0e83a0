#pragma once

#include <random>
#include <vector>

#include "certsync/certsync.hpp"

namespace certsync::testing {

using Rng = std::mt19937_64;

inline Matrix random_rotation_matrix(int d, Rng& rng) { return random_rotation(d, rng); }

inline Pose random_pose(int d, Rng& rng, Scalar spread = 3.0) {
  std::normal_distribution<Scalar> normal(0.0, spread);
  Vector t(d);
  for (int k = 0; k < d; ++k) t[k] = normal(rng);
  return {t, random_rotation(d, rng)};
}

struct GraphSpec {
  int d = 3;
  std::size_t n = 10;
  std::size_t extra_edges = 8;
  bool random_weights = true;
  bool noiseless = false;
  Scalar kappa = 10.0;
  Scalar tau = 20.0;
};

struct TestInstance {
  MeasurementGraph graph;
  std::vector<Pose> truth;
};

/// Random connected graph: a random spanning tree plus extra edges, with random
/// orientations and measurements generated from random ground-truth poses.
inline TestInstance random_instance(const GraphSpec& spec, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Pose> truth(spec.n);
  for (auto& p : truth) p = random_pose(spec.d, rng);
  std::uniform_real_distribution<Scalar> weight(0.5, 5.0);
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t v = 1; v < spec.n; ++v) {
    std::uniform_int_distribution<std::size_t> pick(0, v - 1);
    pairs.emplace_back(pick(rng), v);
  }
  std::uniform_int_distribution<std::size_t> any(0, spec.n - 1);
  for (std::size_t k = 0; k < spec.extra_edges && spec.n > 1; ++k) {
    std::size_t a = any(rng), b = any(rng);
    while (b == a) b = any(rng);
    pairs.emplace_back(a, b);
  }
  std::vector<RelativePoseMeasurement> edges;
  std::bernoulli_distribution flip(0.5);
  for (auto [a, b] : pairs) {
    if (flip(rng)) std::swap(a, b);
    const Scalar kappa = spec.random_weights ? spec.kappa * weight(rng) : spec.kappa;
    const Scalar tau = spec.random_weights ? spec.tau * weight(rng) : spec.tau;
    auto m = sample_measurement(truth[a], truth[b], kappa, tau, rng, spec.noiseless);
    m.tail = a;
    m.head = b;
    edges.push_back(std::move(m));
  }
  return {MeasurementGraph(spec.d, spec.n, std::move(edges)), std::move(truth)};
}

inline Matrix dense(const SparseMatrix& S) { return Matrix(S); }

inline Scalar min_eigenvalue(const Matrix& S) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (S + S.transpose()), Eigen::EigenvaluesOnly);
  return eig.eigenvalues()[0];
}

inline Scalar spectral_norm(const Matrix& S) {
  Eigen::JacobiSVD<Matrix> svd(S);
  return svd.singularValues().size() ? svd.singularValues()[0] : 0.0;
}

inline Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  std::normal_distribution<Scalar> normal;
  Matrix M(rows, cols);
  for (Eigen::Index c = 0; c < cols; ++c)
    for (Eigen::Index r = 0; r < rows; ++r) M(r, c) = normal(rng);
  return M;
}

/// Random unit tangent vector at Y.
inline Matrix random_tangent(const Matrix& Y, int d, Rng& rng) {
  Matrix T = project_tangent(Y, random_matrix(Y.rows(), Y.cols(), rng), d);
  return T / T.norm();
}

/// Dense pseudoinverse-based projector I - (A W^1/2)^+ (A W^1/2) onto ker(A W^1/2).
inline Matrix dense_projector(const MeasurementGraph& g) {
  const Matrix A = dense(incidence_matrix(g));
  const Vector w = edge_weights(g, WeightKind::translational).cwiseSqrt();
  const Matrix AW = A * w.asDiagonal();
  const Matrix pinv = AW.completeOrthogonalDecomposition().pseudoInverse();
  return Matrix::Identity(A.cols(), A.cols()) - pinv * AW;
}

/// Stacked rotations d x dn and translations d x n of a pose list.
inline Matrix rotations_of(const std::vector<Pose>& poses) { return stack_rotations(poses); }
inline Matrix translations_of(const std::vector<Pose>& poses) { return stack_translations(poses); }

}  // namespace certsync::testing
