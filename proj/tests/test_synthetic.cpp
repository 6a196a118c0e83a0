#include <gtest/gtest.h>

#include <set>

#include "test_util.hpp"

using namespace certsync;
using namespace certsync::testing;

namespace {

int lattice_distance(const std::array<int, 3>& a, const std::array<int, 3>& b) {
  return std::abs(a[0] - b[0]) + std::abs(a[1] - b[1]) + std::abs(a[2] - b[2]);
}

/// Counts lattice-adjacent, non-consecutive path pairs by brute force over all pairs.
std::size_t brute_force_candidates(int s, int d) {
  const auto path = boustrophedon_path(s, d);
  std::size_t count = 0;
  for (std::size_t i = 0; i < path.size(); ++i)
    for (std::size_t j = i + 2; j < path.size(); ++j) count += lattice_distance(path[i], path[j]) == 1;
  return count;
}

CubeConfig cube(int s, Scalar p_lc, std::uint64_t seed, int d = 3) {
  CubeConfig c;
  c.s = s;
  c.p_lc = p_lc;
  c.seed = seed;
  c.d = d;
  return c;
}

}  // namespace

TEST(Path, BoustrophedonCoversLatticeWithUnitSteps) {
  for (int d : {2, 3}) {
    for (int s : {2, 3, 4, 7}) {
      const auto path = boustrophedon_path(s, d);
      const std::size_t n = d == 3 ? s * s * s : s * s;
      ASSERT_EQ(path.size(), n);
      EXPECT_EQ(path.front(), (std::array<int, 3>{0, 0, 0}));
      std::set<std::array<int, 3>> seen(path.begin(), path.end());
      EXPECT_EQ(seen.size(), n);
      for (const auto& p : path) {
        for (int k = 0; k < 3; ++k) {
          EXPECT_GE(p[k], 0);
          EXPECT_LT(p[k], k < d ? s : 1);
        }
      }
      for (std::size_t i = 0; i + 1 < n; ++i) EXPECT_EQ(lattice_distance(path[i], path[i + 1]), 1) << i;
    }
  }
}

TEST(Path, CandidateCountMatchesBruteForce) {
  for (int d : {2, 3})
    for (int s : {2, 3, 5, 10}) EXPECT_EQ(loop_closure_candidates(s, d), brute_force_candidates(s, d)) << s << d;
}

TEST(Cube, PureOdometryChain) {
  const auto ds = generate_cube(cube(2, 0.0, 1));
  EXPECT_EQ(ds.graph.num_poses(), 8u);
  EXPECT_EQ(ds.graph.num_measurements(), 7u);
  for (std::size_t e = 0; e < 7; ++e) {
    EXPECT_EQ(ds.graph.measurement(e).tail, e);
    EXPECT_EQ(ds.graph.measurement(e).head, e + 1);
  }
}

TEST(Cube, EdgeStructure) {
  for (int d : {2, 3}) {
    const auto cfg = cube(5, 1.0, 2, d);
    const auto ds = generate_cube(cfg);
    const auto path = boustrophedon_path(cfg.s, d);
    const std::size_t n = path.size();
    EXPECT_EQ(ds.graph.num_measurements(), n - 1 + loop_closure_candidates(cfg.s, d));
    std::set<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t e = 0; e < ds.graph.num_measurements(); ++e) {
      const auto& m = ds.graph.measurement(e);
      if (e + 1 < n) {
        EXPECT_EQ(m.tail, e);
        EXPECT_EQ(m.head, e + 1);
      } else {
        EXPECT_LT(m.tail + 1, m.head);
        EXPECT_EQ(lattice_distance(path[m.tail], path[m.head]), 1);
      }
      EXPECT_TRUE(pairs.emplace(m.tail, m.head).second);
      EXPECT_EQ(m.kappa, cfg.kappa);
      EXPECT_EQ(m.tau, cfg.tau);
      EXPECT_TRUE(is_rotation(m.rotation, 1e-12));
    }
    for (std::size_t i = 0; i < n; ++i) {
      EXPECT_TRUE(is_rotation(ds.ground_truth[i].R, 1e-12));
      for (int k = 0; k < d; ++k) EXPECT_EQ(ds.ground_truth[i].t[k], path[i][k]);
    }
  }
}

TEST(Cube, LoopClosureCountIsBinomial) {
  const std::size_t candidates = loop_closure_candidates(10, 3);
  const Scalar mean = 0.1 * candidates, sd = std::sqrt(candidates * 0.1 * 0.9);
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto ds = generate_cube(cube(10, 0.1, seed));
    EXPECT_EQ(ds.graph.num_poses(), 1000u);
    const Scalar closures = static_cast<Scalar>(ds.graph.num_measurements()) - 999.0;
    EXPECT_LE(std::abs(closures - mean), 4 * sd) << seed;
  }
}

TEST(Cube, Reproducibility) {
  const auto a = generate_cube(cube(4, 0.3, 11)), b = generate_cube(cube(4, 0.3, 11));
  const auto c = generate_cube(cube(4, 0.3, 12));
  ASSERT_EQ(a.graph.num_measurements(), b.graph.num_measurements());
  for (std::size_t e = 0; e < a.graph.num_measurements(); ++e) {
    const auto &x = a.graph.measurement(e), &y = b.graph.measurement(e);
    EXPECT_EQ(x.tail, y.tail);
    EXPECT_EQ(x.head, y.head);
    EXPECT_EQ(x.translation, y.translation);
    EXPECT_EQ(x.rotation, y.rotation);
  }
  for (std::size_t i = 0; i < a.ground_truth.size(); ++i) EXPECT_EQ(a.ground_truth[i].R, b.ground_truth[i].R);
  EXPECT_NE(a.ground_truth[0].R, c.ground_truth[0].R);
}

TEST(Cube, NoiselessMeasurementsAreExact) {
  auto cfg = cube(3, 0.5, 3);
  cfg.noiseless = true;
  const auto ds = generate_cube(cfg);
  for (const auto& m : ds.graph.measurements()) {
    const Pose rel = between(ds.ground_truth[m.tail], ds.ground_truth[m.head]);
    EXPECT_LT((m.translation - rel.t).norm(), 1e-12);
    EXPECT_LT((m.rotation - rel.R).norm(), 1e-12);
  }
  const auto sol = solve_and_certify(ds.graph);
  EXPECT_TRUE(sol.certified);
  EXPECT_LE(sol.objective, 1e-8);
}

TEST(Cube, NearNoiselessSolveIsExact) {
  auto cfg = cube(3, 0.3, 4);
  cfg.kappa = 1e9;
  cfg.tau = 1e9;
  const auto ds = generate_cube(cfg);
  const auto sol = solve_and_certify(ds.graph);
  EXPECT_TRUE(sol.certified);
  EXPECT_LE(std::abs(sol.suboptimality_gap), 1e-6);
  // Per-component noise is 1/sqrt(tau) ~ 3e-5; it accumulates over the 27 poses.
  EXPECT_LE(compare_trajectories(sol.poses, ds.ground_truth).d_S, 30 * std::sqrt(27.0 / cfg.tau));
}

TEST(Cube, ConfigValidation) {
  EXPECT_THROW(generate_cube(cube(1, 0.1, 1)), Error);
  EXPECT_THROW(generate_cube(cube(3, 1.5, 1)), Error);
  EXPECT_THROW(generate_cube(cube(3, -0.1, 1)), Error);
  EXPECT_THROW(generate_cube(cube(3, 0.1, 1, 4)), Error);
  auto c = cube(3, 0.1, 1);
  c.tau = 0;
  EXPECT_THROW(generate_cube(c), Error);
  c = cube(3, 0.1, 1);
  c.kappa = -1;
  EXPECT_THROW(generate_cube(c), Error);
  const CubeConfig defaults;
  EXPECT_EQ(defaults.s, 10);
  EXPECT_EQ(defaults.p_lc, 0.1);
  EXPECT_EQ(defaults.kappa, 16.67);
  EXPECT_EQ(defaults.tau, 75.0);
}

TEST(Measurement, TranslationNoiseStatistics) {
  Rng rng(5);
  const Pose xi{Eigen::Vector3d(1, 2, 3), random_rotation(3, rng)};
  const Pose xj{Eigen::Vector3d(-1, 0, 4), random_rotation(3, rng)};
  const Pose rel = between(xi, xj);
  const int N = 100000;
  Eigen::Vector3d sum2 = Eigen::Vector3d::Zero();
  Scalar total = 0;
  for (int k = 0; k < N; ++k) {
    const auto m = sample_measurement(xi, xj, 16.67, 75.0, rng);
    const Eigen::Vector3d err = m.translation - rel.t;
    sum2 += err.cwiseProduct(err);
    total += err.squaredNorm();
    ASSERT_TRUE(is_rotation(m.rotation, 1e-12));
  }
  EXPECT_NEAR(std::sqrt(total / N), 0.20, 0.005);
  for (int k = 0; k < 3; ++k) EXPECT_NEAR(sum2[k] / N, 1.0 / 75.0, 0.03 / 75.0);
}

TEST(Measurement, ConcentratedNoiseIsNegligible) {
  Rng rng(6);
  for (int d : {2, 3}) {
    const Pose xi = random_pose(d, rng), xj = random_pose(d, rng);
    const Pose rel = between(xi, xj);
    const auto m = sample_measurement(xi, xj, 1e9, 1e9, rng);
    EXPECT_LT((m.translation - rel.t).norm(), 1e-4);
    EXPECT_LT((m.rotation - rel.R).norm(), 1e-4);
  }
}

TEST(RandomRotation, HaarMoments) {
  Rng rng(7);
  for (int d : {2, 3}) {
    const int N = 50000;
    Matrix mean = Matrix::Zero(d, d);
    Scalar trace = 0;
    for (int k = 0; k < N; ++k) {
      const Matrix R = random_rotation(d, rng);
      ASSERT_TRUE(is_rotation(R, 1e-12));
      mean += R;
      trace += R.trace();
    }
    EXPECT_LT((mean / N).cwiseAbs().maxCoeff(), 0.02);
    EXPECT_NEAR(trace / N, 0.0, 0.03);
  }
}
