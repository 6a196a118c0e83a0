#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <random>
#include <vector>

#include "certsync/graph.hpp"
#include "certsync/langevin.hpp"

namespace certsync {

struct CubeConfig {
  int s = 10;
  Scalar p_lc = 0.1;
  Scalar kappa = 16.67;
  Scalar tau = 75.0;
  std::uint64_t seed = 1;
  int d = 3;  ///< 2 generates the planar s x s grid variant
  bool noiseless = false;

  void validate() const {
    if (s < 2) throw Error("CubeConfig: s must be at least 2");
    if (!(p_lc >= 0 && p_lc <= 1)) throw Error("CubeConfig: p_lc must lie in [0, 1]");
    if (!(kappa >= 0) || !std::isfinite(kappa)) throw Error("CubeConfig: kappa must be nonnegative");
    if (!(tau > 0) || !std::isfinite(tau)) throw Error("CubeConfig: tau must be positive");
    if (d != 2 && d != 3) throw Error("CubeConfig: d must be 2 or 3");
  }
};

struct SyntheticDataset {
  MeasurementGraph graph;
  std::vector<Pose> ground_truth;
};

/// Noisy observation of between(xi, xj): t + N(0, I / tau), R * Langevin(I, kappa).
template <class Rng>
RelativePoseMeasurement sample_measurement(const Pose& xi, const Pose& xj, Scalar kappa, Scalar tau, Rng& rng,
                                           bool noiseless = false) {
  const Pose rel = between(xi, xj);
  RelativePoseMeasurement m;
  m.translation = rel.t;
  m.rotation = rel.R;
  m.tau = tau;
  m.kappa = kappa;
  if (noiseless) return m;
  std::normal_distribution<Scalar> normal(0.0, 1.0 / std::sqrt(tau));
  for (Eigen::Index k = 0; k < m.translation.size(); ++k) m.translation[k] += normal(rng);
  const int d = xi.dim();
  m.rotation = rel.R * sample_langevin(LangevinParams{Matrix::Identity(d, d), kappa}, rng);
  return m;
}

/// Lattice positions in boustrophedon order: x fastest, then y, then z, reversing direction
/// on every row and layer so consecutive positions are lattice neighbors.
inline std::vector<std::array<int, 3>> boustrophedon_path(int s, int d) {
  std::vector<std::array<int, 3>> path;
  const int layers = d == 3 ? s : 1;
  int row = 0;
  for (int z = 0; z < layers; ++z) {
    for (int yi = 0; yi < s; ++yi, ++row) {
      const int y = z % 2 == 0 ? yi : s - 1 - yi;
      for (int xi = 0; xi < s; ++xi) {
        const int x = row % 2 == 0 ? xi : s - 1 - xi;
        path.push_back({x, y, z});
      }
    }
  }
  return path;
}

/// Number of lattice-adjacent pose pairs that are not consecutive along the path.
inline std::size_t loop_closure_candidates(int s, int d) {
  const std::size_t S = static_cast<std::size_t>(s);
  const std::size_t n = d == 3 ? S * S * S : S * S;
  const std::size_t adjacent = d == 3 ? 3 * S * S * (S - 1) : 2 * S * (S - 1);
  return adjacent - (n - 1);
}

template <class Rng>
Matrix random_rotation(int d, Rng& rng) {
  if (d == 2) {
    std::uniform_real_distribution<Scalar> angle(-detail::pi, detail::pi);
    return rotation2d(angle(rng));
  }
  std::normal_distribution<Scalar> normal;
  Eigen::Quaterniond q;
  do {
    q = Eigen::Quaterniond(normal(rng), normal(rng), normal(rng), normal(rng));
  } while (q.norm() < 1e-12);
  q.normalize();
  return q.toRotationMatrix();
}

/// Cube-world dataset: a robot sweeping an s^d lattice with odometry along its path and
/// random loop closures between lattice neighbors.
inline SyntheticDataset generate_cube(const CubeConfig& cfg) {
  cfg.validate();
  const int d = cfg.d;
  std::mt19937_64 rng(cfg.seed);
  const auto path = boustrophedon_path(cfg.s, d);
  const std::size_t n = path.size();

  std::vector<Pose> truth(n);
  for (std::size_t i = 0; i < n; ++i) {
    Vector t(d);
    for (int k = 0; k < d; ++k) t[k] = path[i][k];
    truth[i] = Pose{t, random_rotation(d, rng)};
  }

  std::map<std::array<int, 3>, std::size_t> index;
  for (std::size_t i = 0; i < n; ++i) index[path[i]] = i;

  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t i = 0; i + 1 < n; ++i) pairs.emplace_back(i, i + 1);
  std::bernoulli_distribution closure(cfg.p_lc);
  for (std::size_t i = 0; i < n; ++i) {
    for (int axis = 0; axis < d; ++axis) {
      for (int step : {-1, 1}) {
        auto p = path[i];
        p[axis] += step;
        auto it = index.find(p);
        if (it == index.end()) continue;
        const std::size_t j = it->second;
        if (j <= i || j == i + 1) continue;
        if (closure(rng)) pairs.emplace_back(i, j);
      }
    }
  }

  std::vector<RelativePoseMeasurement> edges;
  edges.reserve(pairs.size());
  for (auto [i, j] : pairs) {
    auto m = sample_measurement(truth[i], truth[j], cfg.kappa, cfg.tau, rng, cfg.noiseless);
    m.tail = i;
    m.head = j;
    edges.push_back(std::move(m));
  }
  return {MeasurementGraph(d, n, std::move(edges)), std::move(truth)};
}

}  // namespace certsync
