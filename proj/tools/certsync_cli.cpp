// Command-line front end: generate, solve, certify, evaluate.
//
// Exit codes: 0 certified (or success), 3 feasible but uncertified, 1 input error, 2 usage error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>

#include <CLI11.hpp>

#include "report.hpp"

namespace fs = std::filesystem;
using namespace certsync;
using report::json;

namespace {

constexpr int kCertified = 0;
constexpr int kInputError = 1;
constexpr int kUsageError = 2;
constexpr int kUncertified = 3;

struct SolveOptions {
  std::string input;
  std::string output_dir = ".";
  Eigen::Index r0 = 5;
  Eigen::Index r_max = 0;
  double grad_tol = 1e-2;
  double rel_tol = 1e-5;
  int max_iters = 500;
  double eig_tol = 1e-5;
  std::string method = "chol";
  std::string init = "random";
  std::string preconditioner = "none";
  std::uint64_t seed = 1;
  int threads = 1;
  std::string trace;
};

void add_solver_flags(CLI::App* cmd, SolveOptions& o) {
  cmd->add_option("--r0", o.r0, "Initial rank level")->check(CLI::Range(3, 1 << 20));
  cmd->add_option("--rmax", o.r_max, "Maximum rank level (default dn+1)")->check(CLI::Range(3, 1 << 30));
  cmd->add_option("--grad-tol", o.grad_tol, "Riemannian gradient tolerance")->check(CLI::PositiveNumber);
  cmd->add_option("--rel-tol", o.rel_tol, "Relative function decrease tolerance")->check(CLI::NonNegativeNumber);
  cmd->add_option("--max-iters", o.max_iters, "Trust-region outer iterations per level")->check(CLI::Range(1, 1 << 30));
  cmd->add_option("--eig-tol", o.eig_tol, "Relative certificate tolerance")->check(CLI::PositiveNumber);
  cmd->add_option("--method", o.method, "Projection evaluation")->check(CLI::IsMember({"chol", "qr"}));
  cmd->add_option("--init", o.init, "Initialization")->check(CLI::IsMember({"random", "odometry"}));
  cmd->add_option("--precon", o.preconditioner, "Inner preconditioner")->check(CLI::IsMember({"none", "jacobi"}));
  cmd->add_option("--seed", o.seed, "Random seed");
  cmd->add_option("--threads", o.threads, "Thread cap for linear algebra")->check(CLI::Range(1, 1024));
  cmd->add_option("--trace", o.trace, "Per-iteration CSV trace path");
}

SolverConfig make_config(const SolveOptions& o) {
  SolverConfig cfg;
  cfg.staircase.r0 = o.r0;
  if (o.r_max > 0) cfg.staircase.r_max = o.r_max;
  cfg.staircase.eig_tol = o.eig_tol;
  cfg.staircase.rtr.grad_tol = o.grad_tol;
  cfg.staircase.rtr.rel_func_decrease_tol = o.rel_tol;
  cfg.staircase.rtr.max_outer_iters = o.max_iters;
  cfg.staircase.rtr.preconditioner = o.preconditioner == "jacobi" ? Preconditioner::jacobi : Preconditioner::none;
  cfg.method = o.method == "qr" ? ProjectionMethod::qr : ProjectionMethod::cholesky;
  cfg.init = o.init == "odometry" ? Initialization::odometry : Initialization::random;
  cfg.seed = o.seed;
  return cfg;
}

int cmd_generate(const CubeConfig& cc, const std::string& out_dir) {
  const SyntheticDataset ds = generate_cube(cc);
  fs::create_directories(out_dir);
  const std::string g2o = (fs::path(out_dir) / "dataset.g2o").string();
  const std::string gt = (fs::path(out_dir) / "ground_truth.json").string();
  write_g2o(ds.graph, nullptr, g2o);
  report::save_json(report::ground_truth_json(cc, ds.ground_truth), gt);
  std::cout << "wrote " << g2o << " (n=" << ds.graph.num_poses() << ", m=" << ds.graph.num_measurements()
            << ") and " << gt << '\n';
  return kCertified;
}

int cmd_solve(const SolveOptions& o) {
  const MeasurementGraph g = parse_g2o(o.input);
  SolverConfig cfg = make_config(o);
  if (cfg.staircase.r0 < g.dim() + 1) throw CLI::ValidationError("--r0", "must be at least d + 1");

  std::ofstream trace;
  if (!o.trace.empty()) {
    trace.open(o.trace);
    if (!trace) throw Error("cannot open trace file '" + o.trace + "'");
    write_trace_header(trace);
    cfg.staircase.rtr.trace = &trace;
  }
  Eigen::setNbThreads(o.threads);

  const CertifiedSolution sol = solve_and_certify(g, cfg);
  fs::create_directories(o.output_dir);
  const std::string sol_path = (fs::path(o.output_dir) / "solution.json").string();
  const std::string tum_path = (fs::path(o.output_dir) / "trajectory.tum").string();
  report::save_json(report::solution_json(g, sol, cfg, o.input, o.threads), sol_path);
  report::write_tum(sol.poses, tum_path);

  std::cout << std::setprecision(10);
  std::cout << "poses " << g.num_poses() << ", measurements " << g.num_measurements() << ", d = " << g.dim() << '\n';
  std::cout << "objective        " << sol.objective << '\n';
  std::cout << "sdp lower bound  " << sol.sdp_lower_bound << '\n';
  std::cout << "gap              " << sol.suboptimality_gap << '\n';
  std::cout << "lambda_min(C)    " << sol.certificate.min_eig_C << " (threshold " << -sol.certificate.tolerance_used
            << ")\n";
  std::cout << "certified        " << (sol.certified ? "yes" : "no") << '\n';
  std::cout << "staircase:\n";
  for (const auto& h : sol.staircase_history)
    std::cout << "  r=" << h.r << " objective=" << h.objective << " grad=" << h.grad_norm << " rank=" << h.rank
              << " iterations=" << h.outer_iters << " hessvec=" << h.hess_vec_products << '\n';
  std::cout << "timing (s):";
  for (const auto& [k, v] : sol.timings) std::cout << ' ' << k << '=' << v;
  std::cout << "\nwrote " << sol_path << " and " << tum_path << '\n';
  return sol.certified ? kCertified : kUncertified;
}

int cmd_certify(const std::string& g2o, const std::string& solution, double eig_tol, const std::string& method) {
  const MeasurementGraph g = parse_g2o(g2o);
  const auto poses = report::poses_from_json(report::load_json(solution));
  if (poses.size() != g.num_poses()) throw Error("solution has " + std::to_string(poses.size()) + " poses, graph has " +
                                                 std::to_string(g.num_poses()));
  for (const auto& p : poses)
    if (p.dim() != g.dim()) throw Error("solution dimension does not match the graph");
  BuildOptions bo;
  bo.method = method == "qr" ? ProjectionMethod::qr : ProjectionMethod::cholesky;
  bo.build_qr = bo.method == ProjectionMethod::qr;
  const DataMatrices dm = build_data_matrices(g, bo);
  const Matrix R = stack_rotations(poses);
  CertifyOptions co;
  co.eig_tol = eig_tol;
  const Certificate cert = certify(dm, R, co);
  std::cout << std::setprecision(10) << "objective      " << evaluate_objective(dm, R) << '\n'
            << "lambda_min(C)  " << cert.min_eig_C << '\n'
            << "threshold      " << -cert.tolerance_used << '\n'
            << "converged      " << (cert.converged ? "yes" : "no") << '\n'
            << "certified      " << (cert.certified ? "yes" : "no") << '\n';
  return cert.certified ? kCertified : kUncertified;
}

int cmd_evaluate(const std::string& solution, const std::string& truth) {
  const json sol = report::load_json(solution);
  const auto est = report::poses_from_json(sol);
  const auto ref = report::poses_from_json(report::load_json(truth));
  if (est.size() != ref.size())
    throw Error("pose counts differ: " + std::to_string(est.size()) + " vs " + std::to_string(ref.size()));
  if (!est.empty() && est.front().dim() != ref.front().dim()) throw Error("pose dimensions differ");
  const TrajectoryErrors e = compare_trajectories(est, ref);
  std::cout << std::setprecision(10) << "d_S                      " << e.d_S << '\n'
            << "d_O                      " << e.d_O << '\n'
            << "angular RMS (rad)        " << e.angular_rms << '\n'
            << "translation RMS          " << e.translation_rms << '\n';
  if (sol.contains("objective") && sol.contains("sdp_lower_bound")) {
    const double F = sol["objective"], p = sol["sdp_lower_bound"];
    std::cout << "relative suboptimality   " << (F - p) / std::max(1.0, p) << '\n';
  }
  return kCertified;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Certifiably correct pose-graph optimization"};
  app.require_subcommand(1);

  CubeConfig cube;
  std::string gen_out = ".";
  auto* gen = app.add_subcommand("generate", "Write a synthetic cube dataset and its ground truth");
  gen->add_option("--s", cube.s, "Lattice side length")->check(CLI::Range(2, 1000));
  gen->add_option("--kappa", cube.kappa, "Rotational concentration")->check(CLI::NonNegativeNumber);
  gen->add_option("--tau", cube.tau, "Translational precision")->check(CLI::PositiveNumber);
  gen->add_option("--plc", cube.p_lc, "Loop-closure probability")->check(CLI::Range(0.0, 1.0));
  gen->add_option("--seed", cube.seed, "Random seed");
  gen->add_option("--dim", cube.d, "2 for a planar grid, 3 for the cube")->check(CLI::IsMember({2, 3}));
  gen->add_flag("--noiseless", cube.noiseless, "Exact measurements");
  gen->add_option("-o,--output", gen_out, "Output directory");

  SolveOptions so;
  auto* solve = app.add_subcommand("solve", "Solve a g2o pose graph and certify the result");
  solve->add_option("input", so.input, "g2o file")->required();
  solve->add_option("-o,--output", so.output_dir, "Output directory for solution.json and trajectory.tum");
  add_solver_flags(solve, so);

  std::string cert_g2o, cert_sol, cert_method = "chol";
  double cert_tol = 1e-5;
  auto* cert = app.add_subcommand("certify", "Check global optimality of a stored solution");
  cert->add_option("input", cert_g2o, "g2o file")->required();
  cert->add_option("solution", cert_sol, "solution.json")->required();
  cert->add_option("--eig-tol", cert_tol, "Relative certificate tolerance")->check(CLI::PositiveNumber);
  cert->add_option("--method", cert_method, "Projection evaluation")->check(CLI::IsMember({"chol", "qr"}));

  std::string eval_sol, eval_truth;
  auto* eval = app.add_subcommand("evaluate", "Compare a solution with ground truth up to gauge");
  eval->add_option("solution", eval_sol, "solution.json")->required();
  eval->add_option("truth", eval_truth, "ground_truth.json or another solution.json")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageError;
  }

  try {
    if (*gen) return cmd_generate(cube, gen_out);
    if (*solve) return cmd_solve(so);
    if (*cert) return cmd_certify(cert_g2o, cert_sol, cert_tol, cert_method);
    if (*eval) return cmd_evaluate(eval_sol, eval_truth);
  } catch (const CLI::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInputError;
  }
  return kUsageError;
}
