#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "certsync/stiefel.hpp"

namespace certsync {

enum class Preconditioner { none, jacobi };

struct RtrConfig {
  Scalar grad_tol = 1e-2;
  bool grad_tol_relative = false;  ///< multiply grad_tol by an upper bound on ||Q||_2
  Scalar rel_func_decrease_tol = 1e-5;  ///< 0 disables the relative-decrease stop
  int max_outer_iters = 500;
  int max_inner_iters = 500;
  std::optional<Scalar> initial_radius;  ///< default ||Y0||_F / 8
  std::optional<Scalar> max_radius;      ///< default ||Y0||_F
  Scalar eta_accept = 0.1;
  Scalar tcg_kappa = 0.1;
  Scalar tcg_theta = 1.0;
  Preconditioner preconditioner = Preconditioner::none;

  std::ostream* trace = nullptr;  ///< CSV rows, see write_trace_header
  int trace_level = 0;            ///< value of the "level" column

  void validate() const {
    if (!(grad_tol > 0) || !(rel_func_decrease_tol >= 0) || !(tcg_kappa > 0) || !(tcg_theta > 0))
      throw Error("RtrConfig: tolerances must be positive");
    if (!(eta_accept > 0 && eta_accept < 0.25)) throw Error("RtrConfig: eta_accept must lie in (0, 0.25)");
    if (max_outer_iters < 0 || max_inner_iters < 1) throw Error("RtrConfig: invalid iteration limits");
  }
};

enum class RtrStatus { gradient_tol, rel_decrease, iter_budget };

inline const char* to_string(RtrStatus s) {
  switch (s) {
    case RtrStatus::gradient_tol: return "gradient_tol";
    case RtrStatus::rel_decrease: return "rel_decrease";
    default: return "iter_budget";
  }
}

struct RtrResult {
  Matrix Y_final;
  Scalar objective = 0;
  Scalar grad_norm = 0;
  int outer_iters = 0;
  long hess_vec_products = 0;
  RtrStatus status = RtrStatus::iter_budget;
  std::vector<Scalar> accepted_objectives;  ///< objective after every accepted step, starting at Y0
};

enum class TcgStop { negative_curvature, boundary, kappa_theta, iter_cap };

inline const char* to_string(TcgStop s) {
  switch (s) {
    case TcgStop::negative_curvature: return "negative_curvature";
    case TcgStop::boundary: return "boundary";
    case TcgStop::kappa_theta: return "kappa_theta";
    default: return "iter_cap";
  }
}

struct TcgResult {
  Matrix step;
  Matrix Hstep;  ///< Hessian applied to step
  TcgStop stop = TcgStop::kappa_theta;
  int inner_iters = 0;
};

inline void write_trace_header(std::ostream& os) {
  os << "level,iteration,objective,grad_norm,radius,rho,inner_iterations,accepted\n";
}

namespace detail {

inline Scalar inner(const Matrix& A, const Matrix& B) { return A.cwiseProduct(B).sum(); }

/// Everything the inner solver needs at the current iterate.
struct LocalModel {
  const DataMatrices* dm;
  const Matrix* Y;
  const Matrix* egrad;
  const std::vector<Matrix>* jacobi;  ///< null when unpreconditioned

  Matrix hess(const Matrix& V) const { return riemannian_hessian_vector_product(*dm, *Y, *egrad, V); }

  Matrix precondition(const Matrix& R) const {
    if (!jacobi) return R;
    const int d = dm->d;
    Matrix Z(R.rows(), R.cols());
    for (std::size_t i = 0; i < jacobi->size(); ++i)
      Z.middleCols(d * i, d).noalias() = R.middleCols(d * i, d) * (*jacobi)[i];
    return project_tangent(*Y, Z, d);
  }
};

/// Steihaug-Toint truncated CG on the model <g, s> + 1/2 <s, H s>, ||s|| <= radius.
inline TcgResult truncated_cg(const LocalModel& model, const Matrix& grad, Scalar radius, const RtrConfig& cfg) {
  TcgResult out;
  out.step = Matrix::Zero(grad.rows(), grad.cols());
  out.Hstep = Matrix::Zero(grad.rows(), grad.cols());
  const int d = model.dm->d;

  Matrix r = grad;
  const Scalar r0 = r.norm();
  if (r0 == 0.0) return out;

  Matrix z = model.precondition(r);
  Scalar z_r = inner(z, r);
  Matrix delta = -z;
  Scalar e_Pe = 0, e_Pd = 0, d_Pd = z_r;
  const Scalar radius2 = radius * radius;

  for (int j = 0; j < cfg.max_inner_iters; ++j) {
    const Matrix Hdelta = model.hess(delta);
    ++out.inner_iters;
    const Scalar d_Hd = inner(delta, Hdelta);
    const Scalar alpha = z_r / d_Hd;
    const Scalar e_Pe_new = e_Pe + 2.0 * alpha * e_Pd + alpha * alpha * d_Pd;

    if (d_Hd <= 0 || e_Pe_new >= radius2) {
      const Scalar tau = (-e_Pd + std::sqrt(e_Pd * e_Pd + d_Pd * (radius2 - e_Pe))) / d_Pd;
      out.step += tau * delta;
      out.Hstep += tau * Hdelta;
      out.stop = d_Hd <= 0 ? TcgStop::negative_curvature : TcgStop::boundary;
      return out;
    }

    e_Pe = e_Pe_new;
    out.step += alpha * delta;
    out.Hstep += alpha * Hdelta;
    r += alpha * Hdelta;
    r = project_tangent(*model.Y, r, d);

    const Scalar rn = r.norm();
    if (rn <= r0 * std::min(cfg.tcg_kappa, std::pow(r0, cfg.tcg_theta))) {
      out.stop = TcgStop::kappa_theta;
      return out;
    }

    z = model.precondition(r);
    const Scalar z_r_old = z_r;
    z_r = inner(z, r);
    const Scalar beta = z_r / z_r_old;
    delta = project_tangent(*model.Y, -z + beta * delta, d);
    e_Pd = beta * (e_Pd + alpha * d_Pd);
    d_Pd = z_r + beta * beta * d_Pd;
  }
  out.stop = TcgStop::iter_cap;
  return out;
}

}  // namespace detail

/// Truncated CG for the trust-region subproblem at Y; grad must be the Riemannian gradient.
inline TcgResult truncated_cg(const DataMatrices& dm, const Matrix& Y, const Matrix& grad, Scalar radius,
                              const RtrConfig& cfg) {
  if (!(radius > 0)) throw Error("truncated_cg: radius must be positive");
  const Matrix egrad = euclidean_gradient(dm, Y);
  detail::LocalModel model{&dm, &Y, &egrad, nullptr};
  return detail::truncated_cg(model, grad, radius, cfg);
}

/// Riemannian trust-region minimization of F(Y) = tr(Q Y^T Y) over St(d, r)^n.
inline RtrResult rtr_solve(const DataMatrices& dm, const Matrix& Y0, const RtrConfig& cfg) {
  cfg.validate();
  const int d = dm.d;
  require_dims(Y0.cols() == dm.dn(), "rtr_solve: Y0 must have dn columns");

  std::vector<Matrix> jacobi;
  if (cfg.preconditioner == Preconditioner::jacobi) jacobi = block_jacobi_inverses(dm);
  const Scalar grad_tol = cfg.grad_tol * (cfg.grad_tol_relative ? spectral_norm_bound(dm) : 1.0);

  Scalar radius = cfg.initial_radius.value_or(Y0.norm() / 8.0);
  const Scalar max_radius = cfg.max_radius.value_or(Y0.norm());

  RtrResult res;
  Matrix Y = Y0;
  Matrix YQ = apply_Q(dm, Y);
  Scalar f = detail::inner(Y, YQ);
  Matrix egrad = 2.0 * YQ;
  Matrix grad = project_tangent(Y, egrad, d);
  res.accepted_objectives.push_back(f);

  auto check_finite = [&](Scalar v, int it, const char* what) {
    if (!std::isfinite(v))
      throw NumericalError(std::string("rtr: non-finite ") + what + " at outer iteration " + std::to_string(it));
  };
  check_finite(f, 0, "objective");

  res.status = RtrStatus::iter_budget;
  int consecutive_rejects = 0;
  int it = 0;
  for (; it < cfg.max_outer_iters; ++it) {
    const Scalar gnorm = grad.norm();
    check_finite(gnorm, it, "gradient");
    if (gnorm <= grad_tol) {
      res.status = RtrStatus::gradient_tol;
      break;
    }

    detail::LocalModel model{&dm, &Y, &egrad, jacobi.empty() ? nullptr : &jacobi};
    TcgResult tcg = detail::truncated_cg(model, grad, radius, cfg);
    res.hess_vec_products += tcg.inner_iters;

    const Matrix Ycand = retract(Y, tcg.step, 1.0, d);
    const Matrix YQcand = apply_Q(dm, Ycand);
    const Scalar fcand = detail::inner(Ycand, YQcand);
    check_finite(fcand, it + 1, "objective");

    const Scalar model_decrease = -(detail::inner(grad, tcg.step) + 0.5 * detail::inner(tcg.step, tcg.Hstep));
    const Scalar actual_decrease = f - fcand;
    const Scalar reg = std::max<Scalar>(1.0, std::abs(f)) * std::numeric_limits<Scalar>::epsilon() * 1e3;
    Scalar rho = (actual_decrease + reg) / (model_decrease + reg);
    if (!(model_decrease > -reg)) rho = -std::numeric_limits<Scalar>::infinity();

    const bool at_boundary = tcg.stop == TcgStop::negative_curvature || tcg.stop == TcgStop::boundary;
    if (rho < 0.25)
      radius *= 0.25;
    else if (rho > 0.75 && at_boundary)
      radius = std::min(2.0 * radius, max_radius);

    const bool accepted = rho >= cfg.eta_accept && fcand <= f;
    if (cfg.trace)
      *cfg.trace << cfg.trace_level << ',' << it + 1 << ',' << (accepted ? fcand : f) << ',' << gnorm << ','
                 << radius << ',' << rho << ',' << tcg.inner_iters << ',' << (accepted ? 1 : 0) << '\n';

    if (accepted) {
      consecutive_rejects = 0;
      const Scalar rel = (f - fcand) / std::max(std::abs(f), std::numeric_limits<Scalar>::min());
      Y = Ycand;
      YQ = YQcand;
      f = fcand;
      egrad = 2.0 * YQ;
      grad = project_tangent(Y, egrad, d);
      res.accepted_objectives.push_back(f);
      if (rel < cfg.rel_func_decrease_tol) {
        ++it;
        res.status = grad.norm() <= grad_tol ? RtrStatus::gradient_tol : RtrStatus::rel_decrease;
        break;
      }
    } else if (++consecutive_rejects > 40 || radius < 1e-14 * max_radius) {
      // The model can no longer produce a decrease the objective can resolve.
      ++it;
      res.status = RtrStatus::rel_decrease;
      break;
    }
  }
  res.outer_iters = it;
  res.Y_final = std::move(Y);
  res.objective = f;
  res.grad_norm = grad.norm();
  return res;
}

}  // namespace certsync
