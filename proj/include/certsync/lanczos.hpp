#pragma once

#include <algorithm>
#include <cstdint>
#include <random>

#include "certsync/types.hpp"

namespace certsync {

struct EigenResult {
  Scalar eigenvalue = 0;
  Vector eigenvector;
  Scalar residual = 0;  ///< ||B x - theta x||
  long matvecs = 0;
  bool converged = false;
};

struct LanczosOptions {
  long max_matvecs = 1000;
  Scalar residual_tol = 1e-10;
  Eigen::Index basis_size = 40;
  Eigen::Index keep = 10;
  std::uint64_t seed = 0x5eed;
};

/// Largest eigenpair of a symmetric operator given only products, by thick-restart Lanczos
/// with full reorthogonalization. op(x) must return B x for an n-vector x.
template <class Op>
EigenResult largest_eigenpair(Op&& op, Eigen::Index n, const LanczosOptions& opts = {}) {
  EigenResult out;
  if (n == 0) {
    out.converged = true;
    return out;
  }
  const Eigen::Index kmax = std::min<Eigen::Index>(n, std::max<Eigen::Index>(opts.basis_size, 2));
  const Eigen::Index keep = std::clamp<Eigen::Index>(opts.keep, 1, std::max<Eigen::Index>(1, kmax - 1));

  std::mt19937_64 rng(opts.seed);
  std::normal_distribution<Scalar> normal;
  auto random_vector = [&] {
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = normal(rng);
    return v;
  };

  Matrix V(n, kmax), W(n, kmax);
  Eigen::Index k = 0;
  Vector v = random_vector();

  while (true) {
    while (k < kmax && out.matvecs < opts.max_matvecs) {
      Scalar norm = 0;
      for (int attempt = 0; attempt < 3; ++attempt) {
        for (int pass = 0; pass < 2; ++pass)
          if (k > 0) v -= V.leftCols(k) * (V.leftCols(k).transpose() * v);
        norm = v.norm();
        if (norm > 1e-12) break;
        v = random_vector();
      }
      if (!(norm > 1e-12)) break;
      V.col(k) = v / norm;
      W.col(k) = op(Vector(V.col(k)));
      ++out.matvecs;
      v = W.col(k);
      ++k;
    }

    Matrix H = V.leftCols(k).transpose() * W.leftCols(k);
    H = 0.5 * (H + H.transpose()).eval();
    Eigen::SelfAdjointEigenSolver<Matrix> eig(H);
    const Vector s = eig.eigenvectors().col(k - 1);
    out.eigenvalue = eig.eigenvalues()[k - 1];
    out.eigenvector = V.leftCols(k) * s;
    const Vector r = W.leftCols(k) * s - out.eigenvalue * out.eigenvector;
    out.residual = r.norm();

    if (out.residual <= opts.residual_tol || k == n) {
      out.converged = true;
      return out;
    }
    if (out.matvecs >= opts.max_matvecs) return out;

    const Eigen::Index p = std::min(keep, k - 1);
    const Matrix S = eig.eigenvectors().rightCols(p);
    const Matrix Vp = V.leftCols(k) * S;
    const Matrix Wp = W.leftCols(k) * S;
    V.leftCols(p) = Vp;
    W.leftCols(p) = Wp;
    k = p;
    v = r;
  }
}

}  // namespace certsync
