#pragma once

#include "certsync/lanczos.hpp"
#include "certsync/stiefel.hpp"

namespace certsync {

struct Certificate {
  BlockDiagonal lambda_star;  ///< compact d x dn blocks of Lambda*
  Scalar min_eig_C = 0;
  Vector min_eig_vector;
  Scalar sdp_value = 0;
  Scalar tolerance_used = 0;  ///< absolute threshold: certified iff min_eig_C >= -tolerance_used
  Scalar scale = 0;           ///< upper bound on ||Q||_2 used to scale eig_tol
  Scalar shift = 0;
  Scalar residual = 0;
  long matvecs = 0;
  bool converged = false;
  bool certified = false;
};

/// Lambda* = SymBlockDiag_d(Q Y^T Y), returned as compact d x dn blocks. Y may have any
/// number of rows; for rounded rotations it is d x dn.
inline BlockDiagonal build_lambda_star(const DataMatrices& dm, const Matrix& Y) {
  require_dims(Y.cols() == dm.dn(), "build_lambda_star: Y must have dn columns");
  return sym_block_product(apply_Q(dm, Y), Y, dm.d);
}

/// x -> x (Q - Lambda) for a row vector x.
inline Vector apply_certificate_matrix(const DataMatrices& dm, const BlockDiagonal& lambda, const Vector& x) {
  const Matrix row = x.transpose();
  return (apply_Q(dm, row) - times_block_diagonal(row, lambda, dm.d)).transpose();
}

struct CertifyOptions {
  Scalar eig_tol = 1e-5;
  std::optional<long> max_matvecs;  ///< default 10 dn
  Scalar residual_fraction = 1e-3;  ///< Lanczos residual target as a fraction of the threshold
  std::uint64_t seed = 0x5eed;
};

/// Checks C = Q - Lambda* >= 0 by computing lambda_min(C) with Lanczos on sigma I - C,
/// sigma a Gershgorin-type upper bound on lambda_max(C).
inline Certificate certify(const DataMatrices& dm, const Matrix& Y, const CertifyOptions& opts = {}) {
  const int d = dm.d;
  Certificate cert;
  cert.lambda_star = build_lambda_star(dm, Y);
  cert.sdp_value = evaluate_objective(dm, Y);
  cert.scale = spectral_norm_bound(dm);
  cert.tolerance_used = opts.eig_tol * cert.scale;

  Scalar lambda_floor = 0;
  for (std::size_t i = 0; i < dm.n; ++i) {
    Eigen::SelfAdjointEigenSolver<Matrix> eig(cert.lambda_star.middleCols(d * i, d), Eigen::EigenvaluesOnly);
    lambda_floor = std::max(lambda_floor, -eig.eigenvalues()[0]);
  }
  cert.shift = cert.scale + lambda_floor;

  LanczosOptions lo;
  lo.max_matvecs = opts.max_matvecs.value_or(10 * dm.dn());
  lo.residual_tol = std::max(opts.residual_fraction * cert.tolerance_used, 1e-14 * cert.shift);
  lo.seed = opts.seed;
  const Scalar sigma = cert.shift;
  const auto result = largest_eigenpair(
      [&](const Vector& x) -> Vector { return sigma * x - apply_certificate_matrix(dm, cert.lambda_star, x); },
      dm.dn(), lo);
  cert.min_eig_C = sigma - result.eigenvalue;
  cert.min_eig_vector = result.eigenvector;
  cert.residual = result.residual;
  cert.matvecs = result.matvecs;
  cert.converged = result.converged;
  cert.certified = cert.converged && cert.min_eig_C >= -cert.tolerance_used;
  return cert;
}

}  // namespace certsync
