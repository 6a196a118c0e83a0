#pragma once

#include <optional>
#include <vector>

#include "certsync/certificate.hpp"
#include "certsync/rtr.hpp"

namespace certsync {

struct StaircaseConfig {
  Eigen::Index r0 = 5;
  std::optional<Eigen::Index> r_max;  ///< default dn + 1
  Scalar rank_tol = 1e-6;
  Scalar escape_perturbation = 1e-3;
  bool certify_each_level = true;
  Scalar eig_tol = 1e-5;
  /// Gradient tolerance, relative to the ||Q||_2 bound, of the second solve run at every level
  /// before the rank and certificate tests. Zero disables it.
  Scalar polish_grad_tol = 1e-8;
  int polish_max_iters = 500;
  RtrConfig rtr;
  std::uint64_t seed = 1;
};

struct LevelRecord {
  Eigen::Index r = 0;
  Scalar objective = 0;
  Scalar grad_norm = 0;
  Eigen::Index rank = 0;
  RtrStatus status = RtrStatus::iter_budget;
  int outer_iters = 0;
  long hess_vec_products = 0;
  std::optional<Scalar> min_eig_C;
  bool certified = false;
};

struct StaircaseResult {
  Matrix Y;
  std::vector<LevelRecord> history;
  std::optional<Certificate> certificate;  ///< from the final level when certify_each_level is set
  bool reached_r_max = false;
};

/// Number of singular values above rank_tol * sigma_1; zero for the zero matrix.
inline Eigen::Index numerical_rank(const Matrix& Y, Scalar rank_tol) {
  if (Y.size() == 0) return 0;
  Eigen::BDCSVD<Matrix> svd(Y);
  const Vector s = svd.singularValues();
  if (s.size() == 0 || s[0] == 0.0) return 0;
  return (s.array() > rank_tol * s[0]).count();
}

/// Appends a zero row to Y and moves a distance eps ||Y||_F along a random tangent direction.
inline Matrix lift_and_perturb(const Matrix& Y, int d, Scalar eps, std::uint64_t seed) {
  Matrix L = Matrix::Zero(Y.rows() + 1, Y.cols());
  L.topRows(Y.rows()) = Y;
  if (eps <= 0) return L;
  std::mt19937_64 rng(seed);
  std::normal_distribution<Scalar> normal;
  Matrix G(L.rows(), L.cols());
  for (Eigen::Index c = 0; c < G.cols(); ++c)
    for (Eigen::Index r = 0; r < G.rows(); ++r) G(r, c) = normal(rng);
  Matrix T = project_tangent(L, G, d);
  T *= eps * L.norm() / T.norm();
  return retract(L, T, 1.0, d);
}

/// Solves at increasing rank levels until a level is certified (or, with certification
/// disabled, until the solution is rank deficient) or r_max is exhausted.
inline StaircaseResult riemannian_staircase(const DataMatrices& dm, const Matrix& Y0, const StaircaseConfig& cfg) {
  const int d = dm.d;
  const Eigen::Index r_max = cfg.r_max.value_or(dm.dn() + 1);
  if (Y0.rows() < d + 1 || Y0.rows() > r_max) throw Error("riemannian_staircase: need d + 1 <= r0 <= r_max");
  if (block_orthonormality_residual(Y0, d) > 1e-6) throw Error("riemannian_staircase: Y0 is not feasible");

  StaircaseResult out;
  const Scalar scale = spectral_norm_bound(dm);
  Matrix Y = Y0;
  for (Eigen::Index r = Y0.rows();; ++r) {
    RtrConfig rc = cfg.rtr;
    rc.trace_level = static_cast<int>(r);
    RtrResult res = rtr_solve(dm, Y, rc);
    LevelRecord rec;
    rec.r = r;
    rec.outer_iters = res.outer_iters;
    rec.hess_vec_products = res.hess_vec_products;
    rec.status = res.status;

    if (cfg.polish_grad_tol > 0 && res.grad_norm > cfg.polish_grad_tol * scale) {
      RtrConfig pc = rc;
      pc.grad_tol = cfg.polish_grad_tol;
      pc.grad_tol_relative = true;
      pc.rel_func_decrease_tol = 0;
      pc.max_outer_iters = cfg.polish_max_iters;
      RtrResult pol = rtr_solve(dm, res.Y_final, pc);
      rec.outer_iters += pol.outer_iters;
      rec.hess_vec_products += pol.hess_vec_products;
      rec.status = pol.status;
      res = std::move(pol);
    }
    Y = std::move(res.Y_final);
    rec.objective = res.objective;
    rec.grad_norm = res.grad_norm;
    rec.rank = numerical_rank(Y, cfg.rank_tol);

    bool done = rec.rank < r;
    if (cfg.certify_each_level) {
      CertifyOptions co;
      co.eig_tol = cfg.eig_tol;
      Certificate cert = certify(dm, Y, co);
      rec.min_eig_C = cert.min_eig_C;
      rec.certified = cert.certified;
      done = cert.certified;
      out.certificate = std::move(cert);
    }
    out.history.push_back(rec);
    if (done) break;
    if (r >= r_max) {
      out.reached_r_max = true;
      break;
    }
    Y = lift_and_perturb(Y, d, cfg.escape_perturbation, cfg.seed + static_cast<std::uint64_t>(r));
  }
  out.Y = std::move(Y);
  return out;
}

}  // namespace certsync
