#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace certsync;
using namespace certsync::testing;

namespace {

TestInstance instance(int d, std::uint64_t seed, bool noiseless = false, std::size_t n = 20) {
  GraphSpec spec;
  spec.d = d;
  spec.n = n;
  spec.extra_edges = n;
  spec.noiseless = noiseless;
  spec.kappa = 30;
  spec.tau = 30;
  return random_instance(spec, seed);
}

/// Dense Q - SymBlockDiag(Q Y^T Y), built from the dense Q.
Matrix dense_certificate_matrix(const DataMatrices& dm, const Matrix& Y) {
  const Matrix Q = dense_Q(dm);
  return Q - sym_block_diag(Q * Y.transpose() * Y, dm.d);
}

}  // namespace

TEST(NumericalRank, KnownRanks) {
  Rng rng(1);
  EXPECT_EQ(numerical_rank(Matrix::Zero(4, 9), 1e-6), 0);
  EXPECT_EQ(numerical_rank(Matrix(), 1e-6), 0);
  for (Eigen::Index k = 1; k <= 5; ++k) {
    const Matrix A = random_matrix(6, k, rng) * random_matrix(k, 30, rng);
    EXPECT_EQ(numerical_rank(A, 1e-6), k);
  }
  Matrix B = random_matrix(5, 20, rng);
  B.row(4) = 1e-9 * B.row(0) + B.row(1);
  EXPECT_EQ(numerical_rank(B, 1e-6), 4);
}

TEST(LiftAndPerturb, StaysFeasibleAndNearby) {
  for (int d : {2, 3}) {
    const Matrix Y = random_point(d, d + 1, 15, 4).Y;
    const Matrix L0 = lift_and_perturb(Y, d, 0.0, 1);
    ASSERT_EQ(L0.rows(), Y.rows() + 1);
    EXPECT_EQ(L0.topRows(Y.rows()), Y);
    EXPECT_EQ(L0.bottomRows(1).norm(), 0.0);
    const Matrix L = lift_and_perturb(Y, d, 1e-3, 2);
    EXPECT_LT(block_orthonormality_residual(L, d), 1e-12);
    const Scalar moved = (L - L0).norm();
    EXPECT_GT(moved, 0.5e-3 * Y.norm());
    EXPECT_LT(moved, 2e-3 * Y.norm());
    EXPECT_EQ(lift_and_perturb(Y, d, 1e-3, 2), L);
  }
}

TEST(Lanczos, MatchesDenseEigensolver) {
  Rng rng(2);
  for (Eigen::Index n : {1, 5, 37, 120, 300}) {
    const Matrix G = random_matrix(n, n, rng);
    const Matrix S = 0.5 * (G + G.transpose());
    Eigen::SelfAdjointEigenSolver<Matrix> eig(S);
    LanczosOptions opts;
    opts.max_matvecs = 50 * n + 100;
    opts.residual_tol = 1e-10;
    const auto res = largest_eigenpair([&](const Vector& x) -> Vector { return S * x; }, n, opts);
    ASSERT_TRUE(res.converged) << n;
    EXPECT_NEAR(res.eigenvalue, eig.eigenvalues()[n - 1], 1e-8);
    EXPECT_NEAR(res.eigenvector.norm(), 1.0, 1e-12);
    EXPECT_LT((S * res.eigenvector - res.eigenvalue * res.eigenvector).norm(), 1e-9);
    EXPECT_LE(res.matvecs, opts.max_matvecs);
  }
}

TEST(Lanczos, ClusteredTopOfSpectrum) {
  Rng rng(3);
  const Eigen::Index n = 200;
  Eigen::HouseholderQR<Matrix> qr(random_matrix(n, n, rng));
  const Matrix U = qr.householderQ();
  Vector lam = Vector::LinSpaced(n, 0.0, 1.0);
  lam[n - 1] = 1.0 + 1e-6;
  const Matrix S = U * lam.asDiagonal() * U.transpose();
  LanczosOptions opts;
  opts.max_matvecs = 20000;
  opts.residual_tol = 1e-12;
  const auto res = largest_eigenpair([&](const Vector& x) -> Vector { return S * x; }, n, opts);
  EXPECT_TRUE(res.converged);
  EXPECT_NEAR(res.eigenvalue, 1.0 + 1e-6, 1e-9);
}

TEST(Lanczos, BudgetExhaustionIsReported) {
  Rng rng(4);
  const Eigen::Index n = 400;
  const Matrix G = random_matrix(n, n, rng);
  const Matrix S = G + G.transpose();
  LanczosOptions opts;
  opts.max_matvecs = 5;
  opts.residual_tol = 1e-14;
  const auto res = largest_eigenpair([&](const Vector& x) -> Vector { return S * x; }, n, opts);
  EXPECT_FALSE(res.converged);
  EXPECT_LE(res.matvecs, 5);
}

TEST(Certificate, NoiselessTruthHasZeroMultipliers) {
  for (int d : {2, 3}) {
    const auto inst = instance(d, 10 + d, true);
    const auto dm = build_data_matrices(inst.graph);
    const Matrix R = rotations_of(inst.truth);
    const Scalar scale = spectral_norm_bound(dm);
    EXPECT_LT(build_lambda_star(dm, R).norm(), 1e-9 * scale);
    const auto cert = certify(dm, R);
    EXPECT_TRUE(cert.converged);
    EXPECT_TRUE(cert.certified);
    EXPECT_NEAR(cert.min_eig_C, 0.0, 1e-6 * scale);
    EXPECT_NEAR(cert.sdp_value, 0.0, 1e-9 * scale);
  }
}

TEST(Certificate, MinimumEigenvalueMatchesDenseOracle) {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const int d = seed % 2 ? 3 : 2;
    const auto inst = instance(d, 20 + seed);
    const auto dm = build_data_matrices(inst.graph);
    // A good point (noisy ground truth) and a bad one (random rotations).
    Rng rng(seed);
    std::vector<Pose> bad;
    for (std::size_t i = 0; i < dm.n; ++i) bad.push_back(random_pose(d, rng));
    for (const Matrix& R : {rotations_of(inst.truth), rotations_of(bad)}) {
      const Matrix C = dense_certificate_matrix(dm, R);
      EXPECT_LT((C - C.transpose()).norm(), 1e-9 * C.norm());
      CertifyOptions opts;
      opts.eig_tol = 1e-9;
      const auto cert = certify(dm, R, opts);
      ASSERT_TRUE(cert.converged);
      EXPECT_NEAR(cert.min_eig_C, min_eigenvalue(C), 1e-6 * cert.scale);
      EXPECT_LT(build_lambda_star(dm, R).cwiseAbs().maxCoeff(), 10 * cert.scale * dm.n);
      const Vector& v = cert.min_eig_vector;
      EXPECT_NEAR(v.dot(C * v) / v.squaredNorm(), cert.min_eig_C, 1e-6 * cert.scale);
    }
    const auto bad_cert = certify(dm, rotations_of(bad));
    EXPECT_FALSE(bad_cert.certified);
    EXPECT_LT(bad_cert.min_eig_C, -bad_cert.tolerance_used);
  }
}

TEST(Certificate, CertifiedAnnihilatesTheSolution) {
  const auto inst = instance(3, 40);
  const auto dm = build_data_matrices(inst.graph);
  StaircaseConfig cfg;
  const auto stair = riemannian_staircase(dm, random_point(3, 5, dm.n, 1).Y, cfg);
  ASSERT_TRUE(stair.certificate && stair.certificate->certified);
  // C Y^T = 0 at a critical point, and C is PSD.
  const Matrix C = dense_certificate_matrix(dm, stair.Y);
  EXPECT_LT((C * stair.Y.transpose()).norm(), 1e-6 * dm.dn() * spectral_norm_bound(dm));
  EXPECT_GE(min_eigenvalue(C), -1e-5 * spectral_norm_bound(dm));
}

TEST(Staircase, CertifiesNoisyInstances) {
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const int d = seed % 2 ? 3 : 2;
    const auto inst = instance(d, 50 + seed);
    const auto dm = build_data_matrices(inst.graph);
    StaircaseConfig cfg;
    cfg.r0 = d + 1;
    const auto res = riemannian_staircase(dm, random_point(d, d + 1, dm.n, seed).Y, cfg);
    ASSERT_TRUE(res.certificate);
    EXPECT_TRUE(res.certificate->certified);
    EXPECT_FALSE(res.reached_r_max);
    ASSERT_FALSE(res.history.empty());
    EXPECT_EQ(res.history.front().r, d + 1);
    for (std::size_t k = 1; k < res.history.size(); ++k) EXPECT_EQ(res.history[k].r, res.history[k - 1].r + 1);
    EXPECT_EQ(res.Y.rows(), res.history.back().r);
    EXPECT_LT(block_orthonormality_residual(res.Y, d), 1e-10);
    EXPECT_TRUE(res.history.back().certified);
    // The relaxation value at a certified point is no larger than the objective at any
    // rotation estimate, e.g. the noisy ground truth.
    EXPECT_LE(res.history.back().objective, evaluate_objective(dm, rotations_of(inst.truth)) + 1e-9);
  }
}

TEST(Staircase, RankCriterionWithoutCertification) {
  const auto inst = instance(3, 60, true);
  const auto dm = build_data_matrices(inst.graph);
  StaircaseConfig cfg;
  cfg.certify_each_level = false;
  const auto res = riemannian_staircase(dm, random_point(3, 5, dm.n, 2).Y, cfg);
  EXPECT_FALSE(res.certificate.has_value());
  ASSERT_EQ(res.history.size(), 1u);
  EXPECT_EQ(res.history.back().rank, 3);
  EXPECT_FALSE(res.history.back().min_eig_C.has_value());
}

TEST(Staircase, StopsAtRMax) {
  const auto inst = instance(2, 61);
  const auto dm = build_data_matrices(inst.graph);
  StaircaseConfig cfg;
  cfg.r_max = 4;
  cfg.rtr.max_outer_iters = 1;
  cfg.polish_grad_tol = 0;
  cfg.eig_tol = 1e-14;
  const auto res = riemannian_staircase(dm, random_point(2, 3, dm.n, 3).Y, cfg);
  EXPECT_TRUE(res.reached_r_max);
  EXPECT_EQ(res.history.size(), 2u);
  EXPECT_EQ(res.Y.rows(), 4);
}

TEST(Staircase, RejectsBadStart) {
  const auto inst = instance(3, 62, false, 5);
  const auto dm = build_data_matrices(inst.graph);
  EXPECT_THROW(riemannian_staircase(dm, random_point(3, 3, dm.n, 1).Y, StaircaseConfig{}), Error);
  EXPECT_THROW(riemannian_staircase(dm, Matrix::Ones(5, dm.dn()), StaircaseConfig{}), Error);
  StaircaseConfig cfg;
  cfg.r_max = 4;
  EXPECT_THROW(riemannian_staircase(dm, random_point(3, 5, dm.n, 1).Y, cfg), Error);
}
