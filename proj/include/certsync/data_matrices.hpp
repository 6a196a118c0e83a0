#pragma once

#include <Eigen/OrderingMethods>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseQR>
#include <unsupported/Eigen/SparseExtra>

#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "certsync/graph.hpp"

namespace certsync {

/// How products with the cycle-space projector are evaluated.
enum class ProjectionMethod {
  cholesky,  ///< two triangular solves against the cached factor of A Omega A^T
  qr         ///< least-squares solve with a cached sparse QR of Omega^1/2 A^T
};

inline const char* to_string(ProjectionMethod m) { return m == ProjectionMethod::cholesky ? "chol" : "qr"; }

using CholeskyFactor = Eigen::SimplicialLLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>>;
using QRFactor = Eigen::SparseQR<SparseMatrix, Eigen::COLAMDOrdering<int>>;

/// Every constant operator of the problem, built once per measurement graph.
///
/// Y is always an r x dn block matrix (Y_1 ... Y_n), so the data matrix acts on the right:
/// F(Y) = tr(Q Y^T Y) with Q = L(G^rho) + T^T Omega^1/2 Pi Omega^1/2 T.
struct DataMatrices {
  int d = 0;
  std::size_t n = 0;
  std::size_t m = 0;

  SparseMatrix rot_connection_laplacian;  ///< L(G^rho), dn x dn
  SparseMatrix T;                         ///< m x dn, row e = (k, j) holds -t_kj^T in block k
  Vector omega;                           ///< translational precisions tau_e
  SparseMatrix V;                         ///< n x dn cross terms
  SparseMatrix Sigma;                     ///< dn x dn block diagonal
  SparseMatrix A_reduced;                 ///< (n-1) x m reduced incidence matrix
  SparseMatrix tran_laplacian;            ///< L(W^tau), n x n
  std::vector<std::size_t> edge_tail;

  SparseMatrix sqrt_omega_T;     ///< Omega^1/2 T
  SparseMatrix weighted_reduced;  ///< A_reduced Omega^1/2

  std::shared_ptr<const CholeskyFactor> cholesky;  ///< P (A Omega A^T) P^T = L L^T
  std::shared_ptr<const QRFactor> qr;              ///< (Omega^1/2 A^T) = Q R (column-permuted)

  ProjectionMethod method = ProjectionMethod::cholesky;

  Eigen::Index dn() const { return static_cast<Eigen::Index>(d * n); }

  /// Lower-triangular factor L with P (A Omega A^T) P^T = L L^T.
  SparseMatrix L_factor() const {
    if (!cholesky) return SparseMatrix(0, 0);
    return SparseMatrix(cholesky->matrixL());
  }
};

struct BuildOptions {
  ProjectionMethod method = ProjectionMethod::cholesky;
  bool build_qr = true;  ///< also factor for the QR path so both methods stay available
};

namespace detail {

inline SparseMatrix connection_laplacian(const MeasurementGraph& g) {
  const int d = g.dim();
  const auto dn = static_cast<Eigen::Index>(d * g.num_poses());
  std::vector<Triplet> trips;
  trips.reserve(g.num_measurements() * (2 * d + 2 * d * d));
  for (const auto& meas : g.measurements()) {
    const auto i = static_cast<Eigen::Index>(meas.tail), j = static_cast<Eigen::Index>(meas.head);
    for (int k = 0; k < d; ++k) {
      trips.emplace_back(d * i + k, d * i + k, meas.kappa);
      trips.emplace_back(d * j + k, d * j + k, meas.kappa);
    }
    for (int r = 0; r < d; ++r)
      for (int c = 0; c < d; ++c) {
        trips.emplace_back(d * i + r, d * j + c, -meas.kappa * meas.rotation(r, c));
        trips.emplace_back(d * j + c, d * i + r, -meas.kappa * meas.rotation(r, c));
      }
  }
  SparseMatrix L(dn, dn);
  L.setFromTriplets(trips.begin(), trips.end());
  return L;
}

}  // namespace detail

/// Assembles and factors all problem matrices.
inline DataMatrices build_data_matrices(const MeasurementGraph& g, const BuildOptions& opts = {}) {
  DataMatrices dm;
  dm.d = g.dim();
  dm.n = g.num_poses();
  dm.m = g.num_measurements();
  dm.method = opts.method;
  const int d = dm.d;
  const auto n = static_cast<Eigen::Index>(dm.n);
  const auto m = static_cast<Eigen::Index>(dm.m);
  const Eigen::Index dn = dm.dn();

  dm.rot_connection_laplacian = detail::connection_laplacian(g);
  dm.tran_laplacian = weight_graph_laplacian(g, WeightKind::translational);
  dm.A_reduced = reduced_incidence_matrix(g);
  dm.omega = edge_weights(g, WeightKind::translational);

  std::vector<Triplet> t_trips, v_trips, s_trips;
  t_trips.reserve(m * d);
  v_trips.reserve(2 * m * d);
  s_trips.reserve(m * d * d);
  for (Eigen::Index e = 0; e < m; ++e) {
    const auto& meas = g.measurement(e);
    const auto k = static_cast<Eigen::Index>(meas.tail), l = static_cast<Eigen::Index>(meas.head);
    dm.edge_tail.push_back(meas.tail);
    for (int c = 0; c < d; ++c) {
      t_trips.emplace_back(e, d * k + c, -meas.translation[c]);
      v_trips.emplace_back(k, d * k + c, meas.tau * meas.translation[c]);
      v_trips.emplace_back(l, d * k + c, -meas.tau * meas.translation[c]);
      for (int r = 0; r < d; ++r)
        s_trips.emplace_back(d * k + r, d * k + c, meas.tau * meas.translation[r] * meas.translation[c]);
    }
  }
  dm.T.resize(m, dn);
  dm.T.setFromTriplets(t_trips.begin(), t_trips.end());
  dm.V.resize(n, dn);
  dm.V.setFromTriplets(v_trips.begin(), v_trips.end());
  dm.Sigma.resize(dn, dn);
  dm.Sigma.setFromTriplets(s_trips.begin(), s_trips.end());

  const Vector sqrt_omega = dm.omega.cwiseSqrt();
  dm.sqrt_omega_T = sqrt_omega.asDiagonal() * dm.T;
  dm.weighted_reduced = dm.A_reduced * sqrt_omega.asDiagonal();
  dm.sqrt_omega_T.makeCompressed();
  dm.weighted_reduced.makeCompressed();

  if (n > 1) {
    SparseMatrix K = dm.weighted_reduced * SparseMatrix(dm.weighted_reduced.transpose());
    auto chol = std::make_shared<CholeskyFactor>();
    chol->compute(K);
    if (chol->info() != Eigen::Success)
      throw NumericalError("Cholesky factorization of the reduced translational Laplacian failed");
    dm.cholesky = std::move(chol);

    if (opts.build_qr || opts.method == ProjectionMethod::qr) {
      SparseMatrix B = dm.weighted_reduced.transpose();
      B.makeCompressed();
      auto qr = std::make_shared<QRFactor>();
      qr->compute(B);
      if (qr->info() != Eigen::Success || qr->rank() != n - 1)
        throw NumericalError("QR factorization of the weighted incidence matrix failed");
      dm.qr = std::move(qr);
    }
  }
  return dm;
}

/// Orthogonal projection of each column of X onto ker(A Omega^1/2).
inline Matrix apply_Pi(const DataMatrices& dm, const Matrix& X, ProjectionMethod method) {
  require_dims(X.rows() == static_cast<Eigen::Index>(dm.m), "apply_Pi: X must have m rows");
  if (dm.n <= 1) return X;
  if (method == ProjectionMethod::cholesky) {
    const Matrix W = dm.weighted_reduced * X;
    const Matrix Z = dm.cholesky->solve(W);
    return X - dm.weighted_reduced.transpose() * Z;
  }
  if (!dm.qr) throw Error("apply_Pi: QR factor was not built");
  const Matrix Z = dm.qr->solve(X);
  return X - dm.weighted_reduced.transpose() * Z;
}

inline Matrix apply_Pi(const DataMatrices& dm, const Matrix& X) { return apply_Pi(dm, X, dm.method); }

/// Y * Q_tau evaluated right to left without forming Q_tau.
inline Matrix apply_Qtau(const DataMatrices& dm, const Matrix& Y, ProjectionMethod method) {
  require_dims(Y.cols() == dm.dn(), "apply_Qtau: Y must have dn columns");
  const Matrix X = dm.sqrt_omega_T * Y.transpose();  // m x r
  const Matrix P = apply_Pi(dm, X, method);
  return P.transpose() * dm.sqrt_omega_T;
}

inline Matrix apply_Qtau(const DataMatrices& dm, const Matrix& Y) { return apply_Qtau(dm, Y, dm.method); }

/// Y * Q.
inline Matrix apply_Q(const DataMatrices& dm, const Matrix& Y, ProjectionMethod method) {
  require_dims(Y.cols() == dm.dn(), "apply_Q: Y must have dn columns");
  return Y * dm.rot_connection_laplacian + apply_Qtau(dm, Y, method);
}

inline Matrix apply_Q(const DataMatrices& dm, const Matrix& Y) { return apply_Q(dm, Y, dm.method); }

/// F(Y) = tr(Q Y^T Y).
inline Scalar evaluate_objective(const DataMatrices& dm, const Matrix& Y) {
  require_dims(Y.cols() == dm.dn(), "evaluate_objective: Y must have dn columns");
  return (Y.cwiseProduct(apply_Q(dm, Y))).sum();
}

/// The full (d+1)n x (d+1)n quadratic-form matrix M over (t, R).
inline SparseMatrix build_full_M(const DataMatrices& dm) {
  const auto n = static_cast<Eigen::Index>(dm.n);
  const Eigen::Index dn = dm.dn();
  const SparseMatrix lower_right = dm.rot_connection_laplacian + dm.Sigma;
  std::vector<Triplet> trips;
  auto append = [&](const SparseMatrix& S, Eigen::Index r0, Eigen::Index c0, bool transpose) {
    for (int k = 0; k < S.outerSize(); ++k)
      for (SparseMatrix::InnerIterator it(S, k); it; ++it) {
        if (transpose)
          trips.emplace_back(r0 + it.col(), c0 + it.row(), it.value());
        else
          trips.emplace_back(r0 + it.row(), c0 + it.col(), it.value());
      }
  };
  append(dm.tran_laplacian, 0, 0, false);
  append(dm.V, 0, n, false);
  append(dm.V, n, 0, true);
  append(lower_right, n, n, false);
  SparseMatrix M(n + dn, n + dn);
  M.setFromTriplets(trips.begin(), trips.end());
  return M;
}

/// Cheap upper bound on ||Q||_2: Gershgorin on L(G^rho) plus max_i tr(Sigma_i), since
/// Q_tau = T^T Omega^1/2 Pi Omega^1/2 T is dominated by T^T Omega T = Sigma.
inline Scalar spectral_norm_bound(const DataMatrices& dm) {
  Vector row_abs = Vector::Zero(dm.dn());
  for (int k = 0; k < dm.rot_connection_laplacian.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(dm.rot_connection_laplacian, k); it; ++it)
      row_abs[it.row()] += std::abs(it.value());
  Scalar sigma_max = 0;
  const Vector diag = dm.Sigma.diagonal();
  for (std::size_t i = 0; i < dm.n; ++i) sigma_max = std::max(sigma_max, diag.segment(dm.d * i, dm.d).sum());
  return (row_abs.size() ? row_abs.maxCoeff() : 0.0) + sigma_max;
}

/// Dense Q built directly from its definition with a pseudoinverse; diagnostics and tests only.
inline Matrix dense_Q(const DataMatrices& dm) {
  if (dm.dn() > 2000) throw DimensionError("dense_Q: limited to dn <= 2000");
  const auto m = static_cast<Eigen::Index>(dm.m);
  const Vector sqrt_omega = dm.omega.cwiseSqrt();
  // Full incidence matrix: the reduced one plus the row that makes every column sum to zero.
  Matrix A(dm.n, m);
  A.topRows(dm.n - 1) = Matrix(dm.A_reduced);
  A.row(dm.n - 1) = -A.topRows(dm.n - 1).colwise().sum();
  const Matrix AW = A * sqrt_omega.asDiagonal();
  const Matrix pinv = AW.completeOrthogonalDecomposition().pseudoInverse();
  const Matrix Pi = Matrix::Identity(m, m) - pinv * AW;
  const Matrix ST = Matrix(dm.sqrt_omega_T);
  return Matrix(dm.rot_connection_laplacian) + ST.transpose() * Pi * ST;
}

/// Per-pose inverses of the d x d diagonal blocks of Q, for block-Jacobi preconditioning.
inline std::vector<Matrix> block_jacobi_inverses(const DataMatrices& dm) {
  const int d = dm.d;
  std::vector<std::vector<Eigen::Index>> out_edges(dm.n);
  for (std::size_t e = 0; e < dm.m; ++e) out_edges[dm.edge_tail[e]].push_back(static_cast<Eigen::Index>(e));
  const Matrix ST = Matrix(dm.sqrt_omega_T);
  std::vector<Matrix> inv(dm.n);
  for (std::size_t i = 0; i < dm.n; ++i) {
    Matrix block = Matrix(dm.rot_connection_laplacian.block(d * i, d * i, d, d));
    const auto& edges = out_edges[i];
    if (!edges.empty()) {
      Matrix E = Matrix::Zero(dm.m, edges.size());
      for (std::size_t c = 0; c < edges.size(); ++c) E(edges[c], c) = 1.0;
      const Matrix PiE = apply_Pi(dm, E);
      Matrix Pi_sub(edges.size(), edges.size());
      Matrix S(edges.size(), d);
      for (std::size_t a = 0; a < edges.size(); ++a) {
        S.row(a) = ST.block(edges[a], d * i, 1, d);
        for (std::size_t b = 0; b < edges.size(); ++b) Pi_sub(a, b) = PiE(edges[a], b);
      }
      block += S.transpose() * Pi_sub * S;
    }
    const Scalar reg = 1e-9 * std::max<Scalar>(1.0, block.trace());
    inv[i] = (block + reg * Matrix::Identity(d, d)).inverse();
  }
  return inv;
}

/// Writes each operator as a Matrix Market file under dir.
inline void dump_matrix_market(const DataMatrices& dm, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto save = [&](const SparseMatrix& S, const char* name) {
    if (!Eigen::saveMarket(S, (dir / name).string())) throw Error(std::string("failed to write ") + name);
  };
  save(dm.rot_connection_laplacian, "connection_laplacian.mtx");
  save(dm.T, "T.mtx");
  save(dm.V, "V.mtx");
  save(dm.Sigma, "Sigma.mtx");
  save(dm.A_reduced, "reduced_incidence.mtx");
  save(dm.tran_laplacian, "translational_laplacian.mtx");
  SparseMatrix Omega(dm.m, dm.m);
  std::vector<Triplet> trips;
  for (std::size_t e = 0; e < dm.m; ++e) trips.emplace_back(e, e, dm.omega[e]);
  Omega.setFromTriplets(trips.begin(), trips.end());
  save(Omega, "Omega.mtx");
  if (dm.cholesky) save(dm.L_factor(), "L_factor.mtx");
}

}  // namespace certsync
