#pragma once

#include <cstdint>
#include <random>

#include "certsync/data_matrices.hpp"

namespace certsync {

/// A point of the product manifold St(d, r)^n stored as the r x dn matrix [Y_1 ... Y_n].
struct StaircasePoint {
  Matrix Y;
  int d = 0;

  Eigen::Index rank_level() const { return Y.rows(); }
  std::size_t num_blocks() const { return d ? static_cast<std::size_t>(Y.cols() / d) : 0; }
};

/// Compact storage for block-diagonal d x dn data: block i occupies columns [d i, d i + d).
using BlockDiagonal = Matrix;

/// Blocks 1/2 (A_i^T B_i + B_i^T A_i) in compact d x dn form.
inline BlockDiagonal sym_block_product(const Matrix& A, const Matrix& B, int d) {
  require_dims(A.rows() == B.rows() && A.cols() == B.cols() && A.cols() % d == 0,
               "sym_block_product: shape mismatch");
  const Eigen::Index n = A.cols() / d;
  BlockDiagonal S(d, A.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    const Matrix P = A.middleCols(d * i, d).transpose() * B.middleCols(d * i, d);
    S.middleCols(d * i, d) = 0.5 * (P + P.transpose());
  }
  return S;
}

/// Block-wise right multiplication X_i S_i.
inline Matrix times_block_diagonal(const Matrix& X, const BlockDiagonal& S, int d) {
  require_dims(S.rows() == d && S.cols() == X.cols(), "times_block_diagonal: shape mismatch");
  Matrix out(X.rows(), X.cols());
  for (Eigen::Index i = 0; i < X.cols() / d; ++i)
    out.middleCols(d * i, d).noalias() = X.middleCols(d * i, d) * S.middleCols(d * i, d);
  return out;
}

/// Expands compact blocks into a dense dn x dn block-diagonal matrix.
inline Matrix expand_block_diagonal(const BlockDiagonal& S, int d) {
  Matrix out = Matrix::Zero(S.cols(), S.cols());
  for (Eigen::Index i = 0; i < S.cols() / d; ++i) out.block(d * i, d * i, d, d) = S.middleCols(d * i, d);
  return out;
}

/// SymBlockDiag_d(X) = 1/2 BDiag_d(X + X^T) for a square dn x dn matrix.
inline Matrix sym_block_diag(const Matrix& X, int d) {
  if (X.rows() != X.cols() || d <= 0 || X.rows() % d != 0)
    throw DimensionError("sym_block_diag: matrix must be square with size divisible by d");
  Matrix out = Matrix::Zero(X.rows(), X.cols());
  for (Eigen::Index i = 0; i < X.rows() / d; ++i) {
    const auto B = X.block(d * i, d * i, d, d);
    out.block(d * i, d * i, d, d) = 0.5 * (B + B.transpose());
  }
  return out;
}

/// max_i ||Y_i^T Y_i - I_d||_F
inline Scalar block_orthonormality_residual(const Matrix& Y, int d) {
  Scalar worst = 0;
  const Matrix I = Matrix::Identity(d, d);
  for (Eigen::Index i = 0; i < Y.cols() / d; ++i) {
    const auto B = Y.middleCols(d * i, d);
    worst = std::max(worst, (B.transpose() * B - I).norm());
  }
  return worst;
}

/// ||SymBlockDiag_d(Y^T X)||_F, zero exactly for tangent vectors.
inline Scalar tangency_residual(const Matrix& Y, const Matrix& X, int d) {
  return sym_block_product(Y, X, d).norm();
}

namespace detail {

/// Thin Q factor of an r x d matrix with the diagonal of R made nonnegative.
inline Matrix orthonormalize_block(const Matrix& B) {
  const Eigen::Index r = B.rows(), d = B.cols();
  Eigen::HouseholderQR<Matrix> qr(B);
  Matrix Q = qr.householderQ() * Matrix::Identity(r, d);
  const Matrix R = qr.matrixQR().topRows(d).template triangularView<Eigen::Upper>();
  for (Eigen::Index k = 0; k < d; ++k)
    if (R(k, k) < 0) Q.col(k) *= -1.0;
  return Q;
}

}  // namespace detail

/// Haar-random point of St(d, r)^n; identical output for identical (d, r, n, seed).
inline StaircasePoint random_point(int d, Eigen::Index r, std::size_t n, std::uint64_t seed) {
  if (r < d) throw DimensionError("random_point: r must be at least d");
  std::mt19937_64 rng(seed);
  std::normal_distribution<Scalar> normal(0.0, 1.0);
  StaircasePoint p{Matrix(r, static_cast<Eigen::Index>(d * n)), d};
  for (std::size_t i = 0; i < n; ++i) {
    Matrix G(r, d);
    for (Eigen::Index c = 0; c < d; ++c)
      for (Eigen::Index k = 0; k < r; ++k) G(k, c) = normal(rng);
    p.Y.middleCols(d * i, d) = detail::orthonormalize_block(G);
  }
  return p;
}

/// Orthogonal projection onto the tangent space at Y: X - Y SymBlockDiag_d(Y^T X).
inline Matrix project_tangent(const Matrix& Y, const Matrix& X, int d) {
  require_dims(Y.rows() == X.rows() && Y.cols() == X.cols(), "project_tangent: shape mismatch");
  return X - times_block_diagonal(Y, sym_block_product(Y, X, d), d);
}

inline Matrix euclidean_gradient(const DataMatrices& dm, const Matrix& Y) { return 2.0 * apply_Q(dm, Y); }

inline Matrix riemannian_gradient(const DataMatrices& dm, const Matrix& Y) {
  return project_tangent(Y, euclidean_gradient(dm, Y), dm.d);
}

/// Hessian-vector product given a precomputed Euclidean gradient at Y.
inline Matrix riemannian_hessian_vector_product(const DataMatrices& dm, const Matrix& Y, const Matrix& egrad,
                                                const Matrix& Ydot) {
  const int d = dm.d;
  require_dims(Ydot.rows() == Y.rows() && Ydot.cols() == Y.cols(), "hessian: shape mismatch");
  const Scalar res = tangency_residual(Y, Ydot, d);
  if (res > 1e-6 * std::max<Scalar>(1.0, Ydot.norm()))
    throw DimensionError("hessian: direction is not tangent (residual " + std::to_string(res) + ")");
  const Matrix H = 2.0 * apply_Q(dm, Ydot) - times_block_diagonal(Ydot, sym_block_product(Y, egrad, d), d);
  return project_tangent(Y, H, d);
}

inline Matrix riemannian_hessian_vector_product(const DataMatrices& dm, const Matrix& Y, const Matrix& Ydot) {
  return riemannian_hessian_vector_product(dm, Y, euclidean_gradient(dm, Y), Ydot);
}

/// QR retraction R_Y(step * Ydot), computed one block at a time.
inline Matrix retract(const Matrix& Y, const Matrix& Ydot, Scalar step, int d) {
  require_dims(Y.rows() == Ydot.rows() && Y.cols() == Ydot.cols(), "retract: shape mismatch");
  if (step == 0.0) return Y;
  Matrix out(Y.rows(), Y.cols());
  for (Eigen::Index i = 0; i < Y.cols() / d; ++i) {
    Matrix Q = detail::orthonormalize_block(Y.middleCols(d * i, d) + step * Ydot.middleCols(d * i, d));
    if ((Q.transpose() * Q - Matrix::Identity(d, d)).norm() > 1e-8) Q = detail::orthonormalize_block(Q);
    out.middleCols(d * i, d) = Q;
  }
  return out;
}

}  // namespace certsync
