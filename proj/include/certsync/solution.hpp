#pragma once

#include <chrono>
#include <map>
#include <queue>
#include <string>
#include <vector>

#include "certsync/staircase.hpp"

namespace certsync {

/// argmax_{G in SO(d)} <G, M>_F = U Xi V^T with Xi = diag(1, ..., 1, det(U V^T)).
inline Matrix nearest_rotation(const Matrix& M) {
  require_dims(M.rows() == M.cols(), "nearest_rotation: matrix must be square");
  Eigen::JacobiSVD<Matrix> svd(M, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Matrix& U = svd.matrixU();
  const Matrix& V = svd.matrixV();
  Vector xi = Vector::Ones(M.rows());
  xi[M.rows() - 1] = (U * V.transpose()).determinant() < 0 ? -1.0 : 1.0;
  return U * xi.asDiagonal() * V.transpose();
}

/// Rank-d rounding of a staircase solution to a d x dn matrix of rotations.
inline Matrix round_solution(const Matrix& Y, int d) {
  require_dims(Y.cols() % d == 0 && Y.rows() >= d, "round_solution: bad shape");
  const Eigen::Index n = Y.cols() / d;
  Eigen::BDCSVD<Matrix> svd(Y, Eigen::ComputeThinU);
  Matrix R = svd.matrixU().leftCols(d).transpose() * Y;  // Xi_d V_d^T

  Eigen::Index positive = 0;
  for (Eigen::Index i = 0; i < n; ++i)
    if (R.middleCols(d * i, d).determinant() > 0) ++positive;
  if (positive < (n + 1) / 2) R.row(d - 1) *= -1.0;

  for (Eigen::Index i = 0; i < n; ++i) R.middleCols(d * i, d) = nearest_rotation(R.middleCols(d * i, d));
  return R;
}

/// Optimal translations for fixed rotations, gauge-fixed so that t_1 = 0. Returns d x n.
inline Matrix recover_translations(const DataMatrices& dm, const Matrix& R) {
  require_dims(R.rows() == dm.d && R.cols() == dm.dn(), "recover_translations: R must be d x dn");
  const auto n = static_cast<Eigen::Index>(dm.n);
  Matrix t = Matrix::Zero(dm.d, n);
  if (n > 1) {
    // X L(W^tau) = -R V^T with the last pose anchored at the origin.
    const Matrix rhs = -(dm.V * R.transpose());  // n x d
    const Matrix X = dm.cholesky->solve(rhs.topRows(n - 1));
    if (dm.cholesky->info() != Eigen::Success) throw NumericalError("recover_translations: solve failed");
    t.leftCols(n - 1) = X.transpose();
  }
  return t.colwise() - t.col(0);
}

inline Scalar suboptimality_bound(Scalar objective, Scalar sdp_value) { return objective - sdp_value; }

enum class Initialization { random, odometry };

/// Rotations from composing measurements along a breadth-first spanning tree, as d x dn.
inline Matrix spanning_tree_rotations(const MeasurementGraph& g) {
  const int d = g.dim();
  const std::size_t n = g.num_poses();
  std::vector<std::vector<std::size_t>> incident(n);
  for (std::size_t e = 0; e < g.num_measurements(); ++e) {
    incident[g.measurement(e).tail].push_back(e);
    incident[g.measurement(e).head].push_back(e);
  }
  Matrix R = Matrix::Zero(d, static_cast<Eigen::Index>(d * n));
  std::vector<bool> seen(n, false);
  std::queue<std::size_t> q;
  R.leftCols(d).setIdentity();
  seen[0] = true;
  q.push(0);
  while (!q.empty()) {
    const auto u = q.front();
    q.pop();
    for (auto e : incident[u]) {
      const auto& m = g.measurement(e);
      const auto v = m.tail == u ? m.head : m.tail;
      if (seen[v]) continue;
      seen[v] = true;
      const Matrix Ru = R.middleCols(d * u, d);
      R.middleCols(d * v, d) = m.tail == u ? Matrix(Ru * m.rotation) : Matrix(Ru * m.rotation.transpose());
      q.push(v);
    }
  }
  return R;
}

struct SolverConfig {
  StaircaseConfig staircase;
  ProjectionMethod method = ProjectionMethod::cholesky;
  Initialization init = Initialization::random;
  std::uint64_t seed = 1;
};

struct CertifiedSolution {
  std::vector<Pose> poses;
  Scalar objective = 0;
  Scalar sdp_lower_bound = 0;
  Scalar suboptimality_gap = 0;
  bool certified = false;
  Certificate certificate;
  Eigen::Index final_rank_level = 0;
  std::vector<LevelRecord> staircase_history;
  std::map<std::string, double> timings;  ///< seconds per stage
  Matrix R;  ///< rounded rotations d x dn, before output gauge fixing
  Matrix Y;  ///< staircase output
};

/// Full pipeline: build, initialize, staircase, round, recover translations, certify.
inline CertifiedSolution solve_and_certify(const MeasurementGraph& g, const SolverConfig& cfg = {}) {
  using clock = std::chrono::steady_clock;
  auto seconds = [](clock::time_point a, clock::time_point b) { return std::chrono::duration<double>(b - a).count(); };
  CertifiedSolution sol;
  const int d = g.dim();
  const std::size_t n = g.num_poses();

  auto t0 = clock::now();
  BuildOptions bo;
  bo.method = cfg.method;
  bo.build_qr = cfg.method == ProjectionMethod::qr;
  const DataMatrices dm = build_data_matrices(g, bo);
  auto t1 = clock::now();
  sol.timings["build"] = seconds(t0, t1);

  const Eigen::Index r0 = cfg.staircase.r0;
  Matrix Y0;
  if (cfg.init == Initialization::random) {
    Y0 = random_point(d, r0, n, cfg.seed).Y;
  } else {
    Y0 = Matrix::Zero(r0, dm.dn());
    Y0.topRows(d) = spanning_tree_rotations(g);
  }
  auto t2 = clock::now();
  sol.timings["initialize"] = seconds(t1, t2);

  StaircaseConfig sc = cfg.staircase;
  sc.seed = cfg.seed ^ 0x9e3779b97f4a7c15ULL;
  StaircaseResult stair = riemannian_staircase(dm, Y0, sc);
  auto t3 = clock::now();
  sol.timings["staircase"] = seconds(t2, t3);
  sol.staircase_history = stair.history;
  sol.final_rank_level = stair.Y.rows();
  sol.sdp_lower_bound = evaluate_objective(dm, stair.Y);

  sol.R = round_solution(stair.Y, d);
  const Matrix t = recover_translations(dm, sol.R);
  sol.objective = evaluate_objective(dm, sol.R);
  sol.suboptimality_gap = suboptimality_bound(sol.objective, sol.sdp_lower_bound);
  auto t4 = clock::now();
  sol.timings["round"] = seconds(t3, t4);

  CertifyOptions co;
  co.eig_tol = cfg.staircase.eig_tol;
  sol.certificate = certify(dm, sol.R, co);
  sol.certificate.sdp_value = sol.sdp_lower_bound;
  auto t5 = clock::now();
  sol.timings["certify"] = seconds(t4, t5);
  sol.timings["total"] = seconds(t0, t5);

  // C >= -eps I makes F(R) - eps dn a lower bound on the relaxation, so the gap must fit in it.
  const Scalar gap_allowance = std::max(sol.certificate.tolerance_used * static_cast<Scalar>(dm.dn()),
                                        1e-8 * (1.0 + std::abs(sol.objective)));
  sol.certified = sol.certificate.certified && sol.suboptimality_gap <= gap_allowance;

  const Matrix R1t = sol.R.leftCols(d).transpose();
  sol.poses.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    sol.poses.push_back(Pose{R1t * t.col(i), R1t * sol.R.middleCols(d * i, d)});
  sol.Y = std::move(stair.Y);
  return sol;
}

}  // namespace certsync
