#pragma once

#include <fstream>
#include <iomanip>
#include <string>
#include <vector>

#include <json.hpp>

#include "certsync/certsync.hpp"

namespace certsync::report {

using nlohmann::json;

inline json matrix_rows(const Matrix& M) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < M.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < M.cols(); ++c) row.push_back(M(r, c));
    rows.push_back(row);
  }
  return rows;
}

inline json vector_json(const Vector& v) { return json(std::vector<Scalar>(v.data(), v.data() + v.size())); }

inline json pose_json(const Pose& p, std::int64_t id) {
  json j{{"id", id}, {"t", vector_json(p.t)}, {"R", matrix_rows(p.R)}};
  if (p.dim() == 2) {
    j["theta"] = std::atan2(p.R(1, 0), p.R(0, 0));
  } else {
    const auto q = certsync::detail::rotation_to_quaternion(p.R);
    j["q"] = {q[0], q[1], q[2], q[3]};
  }
  return j;
}

inline Pose pose_from_json(const json& j) {
  const auto t = j.at("t").get<std::vector<Scalar>>();
  const auto& rows = j.at("R");
  const auto d = static_cast<Eigen::Index>(t.size());
  if (d != 2 && d != 3) throw Error("pose record has invalid dimension");
  if (rows.size() != static_cast<std::size_t>(d)) throw Error("pose record has a malformed rotation");
  Pose p{Vector(d), Matrix(d, d)};
  for (Eigen::Index r = 0; r < d; ++r) {
    p.t[r] = t[r];
    const auto row = rows.at(r).get<std::vector<Scalar>>();
    if (row.size() != static_cast<std::size_t>(d)) throw Error("pose record has a malformed rotation");
    for (Eigen::Index c = 0; c < d; ++c) p.R(r, c) = row[c];
  }
  return p;
}

inline std::vector<Pose> poses_from_json(const json& doc) {
  std::vector<Pose> poses;
  for (const auto& p : doc.at("poses")) poses.push_back(pose_from_json(p));
  return poses;
}

inline json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error("'" + path + "' is not valid JSON: " + e.what());
  }
}

inline void save_json(const json& doc, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << std::setw(2) << doc << '\n';
  if (!out) throw Error("failed writing '" + path + "'");
}

inline json level_json(const LevelRecord& h) {
  json j{{"r", h.r},
         {"objective", h.objective},
         {"grad_norm", h.grad_norm},
         {"rank", h.rank},
         {"status", to_string(h.status)},
         {"outer_iterations", h.outer_iters},
         {"hessian_vector_products", h.hess_vec_products},
         {"certified", h.certified}};
  if (h.min_eig_C) j["min_eig_C"] = *h.min_eig_C;
  return j;
}

inline json certificate_json(const Certificate& c) {
  return {{"min_eig_C", c.min_eig_C}, {"tolerance_used", c.tolerance_used}, {"norm_bound", c.scale},
          {"shift", c.shift},         {"residual", c.residual},             {"matvecs", c.matvecs},
          {"converged", c.converged}, {"certified", c.certified}};
}

inline json config_json(const SolverConfig& cfg) {
  const auto& st = cfg.staircase;
  const auto& rt = st.rtr;
  json j{{"r0", st.r0},
         {"rank_tol", st.rank_tol},
         {"escape_perturbation", st.escape_perturbation},
         {"certify_each_level", st.certify_each_level},
         {"eig_tol", st.eig_tol},
         {"polish_grad_tol", st.polish_grad_tol},
         {"polish_max_iters", st.polish_max_iters},
         {"grad_tol", rt.grad_tol},
         {"rel_func_decrease_tol", rt.rel_func_decrease_tol},
         {"max_outer_iters", rt.max_outer_iters},
         {"max_inner_iters", rt.max_inner_iters},
         {"eta_accept", rt.eta_accept},
         {"tcg_kappa", rt.tcg_kappa},
         {"tcg_theta", rt.tcg_theta},
         {"preconditioner", rt.preconditioner == Preconditioner::jacobi ? "jacobi" : "none"},
         {"method", to_string(cfg.method)},
         {"init", cfg.init == Initialization::random ? "random" : "odometry"},
         {"seed", cfg.seed}};
  j["r_max"] = st.r_max ? json(*st.r_max) : json("dn+1");
  return j;
}

inline json solution_json(const MeasurementGraph& g, const CertifiedSolution& sol, const SolverConfig& cfg,
                          const std::string& input, int threads) {
  json poses = json::array();
  for (std::size_t i = 0; i < sol.poses.size(); ++i) poses.push_back(pose_json(sol.poses[i], g.vertex_id(i)));
  json history = json::array();
  for (const auto& h : sol.staircase_history) history.push_back(level_json(h));
  const Scalar rel = sol.suboptimality_gap / std::max<Scalar>(1.0, sol.sdp_lower_bound);
  json cfg_json = config_json(cfg);
  cfg_json["threads"] = threads;
  return {{"schema", 1},
          {"command", "solve"},
          {"input", input},
          {"config", cfg_json},
          {"d", g.dim()},
          {"n", g.num_poses()},
          {"m", g.num_measurements()},
          {"objective", sol.objective},
          {"sdp_lower_bound", sol.sdp_lower_bound},
          {"suboptimality_gap", sol.suboptimality_gap},
          {"relative_suboptimality", rel},
          {"certified", sol.certified},
          {"certificate", certificate_json(sol.certificate)},
          {"final_rank_level", sol.final_rank_level},
          {"staircase_history", history},
          {"timings", sol.timings},
          {"poses", poses}};
}

inline json ground_truth_json(const CubeConfig& cfg, const std::vector<Pose>& truth) {
  json poses = json::array();
  for (std::size_t i = 0; i < truth.size(); ++i) poses.push_back(pose_json(truth[i], static_cast<std::int64_t>(i)));
  return {{"schema", 1},
          {"command", "generate"},
          {"config",
           {{"s", cfg.s},
            {"p_lc", cfg.p_lc},
            {"kappa", cfg.kappa},
            {"tau", cfg.tau},
            {"seed", cfg.seed},
            {"d", cfg.d},
            {"noiseless", cfg.noiseless}}},
          {"d", cfg.d},
          {"n", truth.size()},
          {"poses", poses}};
}

/// "timestamp tx ty tz qx qy qz qw" per pose, with the pose index as timestamp.
inline void write_tum(const std::vector<Pose>& poses, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  out << std::setprecision(17);
  for (std::size_t i = 0; i < poses.size(); ++i) {
    const Pose& p = poses[i];
    Eigen::Matrix3d R = Eigen::Matrix3d::Identity();
    Eigen::Vector3d t = Eigen::Vector3d::Zero();
    R.topLeftCorner(p.dim(), p.dim()) = p.R;
    t.head(p.dim()) = p.t;
    const auto q = certsync::detail::rotation_to_quaternion(R);
    out << i << ' ' << t[0] << ' ' << t[1] << ' ' << t[2] << ' ' << q[0] << ' ' << q[1] << ' ' << q[2] << ' '
        << q[3] << '\n';
  }
  if (!out) throw Error("failed writing '" + path + "'");
}

}  // namespace certsync::report
