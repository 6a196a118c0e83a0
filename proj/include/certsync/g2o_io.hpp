#pragma once

#include <cmath>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <optional>
#include <sstream>
#include <string>
#include <unordered_map>
#include <vector>

#include "certsync/graph.hpp"

namespace certsync {

/// How anisotropic g2o information matrices collapse onto the isotropic (tau, kappa) model.
///
///   tau   = d / trace(I_t^-1)          (harmonic mean of the translational precisions)
///   kappa = rotational_scale * mean(diag(I_r))
///
/// with rotational_scale = 1/2 matching the small-angle expansion of the Langevin density.
struct InformationRule {
  Scalar rotational_scale = 0.5;
};

namespace detail {

inline Matrix quaternion_to_rotation(Scalar qx, Scalar qy, Scalar qz, Scalar qw, std::size_t line) {
  const Scalar norm = std::sqrt(qx * qx + qy * qy + qz * qz + qw * qw);
  if (!(std::abs(norm - 1.0) < 1e-6)) throw ParseError("quaternion is not unit norm", line);
  Eigen::Quaterniond q(qw / norm, qx / norm, qy / norm, qz / norm);
  return q.toRotationMatrix();
}

inline Eigen::Vector4d rotation_to_quaternion(const Matrix& R) {
  Eigen::Matrix3d R3 = R;
  Eigen::Quaterniond q(R3);
  q.normalize();
  return {q.x(), q.y(), q.z(), q.w()};
}

/// Reads an upper-triangular row-major packing of a k x k symmetric matrix.
inline Matrix unpack_upper(const std::vector<Scalar>& packed, int k) {
  Matrix I(k, k);
  std::size_t idx = 0;
  for (int r = 0; r < k; ++r)
    for (int c = r; c < k; ++c) I(r, c) = I(c, r) = packed[idx++];
  return I;
}

inline std::pair<Scalar, Scalar> collapse_information(const Matrix& info, int d,
                                                      const InformationRule& rule, std::size_t line) {
  const int rot_dim = d == 2 ? 1 : 3;
  const Matrix It = info.topLeftCorner(d, d);
  const Matrix Ir = info.bottomRightCorner(rot_dim, rot_dim);
  Eigen::LDLT<Matrix> ldlt(It);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
    throw ParseError("translational information block is not positive definite", line);
  const Scalar cov_trace = ldlt.solve(Matrix::Identity(d, d)).trace();
  const Scalar tau = d / cov_trace;
  const Scalar kappa = rule.rotational_scale * Ir.diagonal().mean();
  if (!(tau > 0) || !std::isfinite(tau)) throw ParseError("non-positive translational precision", line);
  if (!(kappa >= 0) || !std::isfinite(kappa)) throw ParseError("negative rotational concentration", line);
  return {tau, kappa};
}

}  // namespace detail

/// Parses a g2o pose-graph from a stream. Vertex ids are remapped to [0, n) in order of
/// first appearance; EDGE records may reference vertices that have no VERTEX record.
inline MeasurementGraph parse_g2o(std::istream& in, const InformationRule& rule = {}) {
  std::unordered_map<std::int64_t, std::size_t> index;
  std::vector<std::int64_t> ids;
  std::vector<std::optional<Pose>> init;
  std::vector<RelativePoseMeasurement> edges;
  int d = 0;

  auto vertex = [&](std::int64_t id) {
    auto [it, inserted] = index.try_emplace(id, ids.size());
    if (inserted) {
      ids.push_back(id);
      init.emplace_back();
    }
    return it->second;
  };
  auto set_dim = [&](int dd, std::size_t line) {
    if (d == 0) d = dd;
    if (d != dd) throw ParseError("mixed 2-D and 3-D records", line);
  };

  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    std::istringstream ls(raw);
    std::string tag;
    if (!(ls >> tag) || tag[0] == '#') continue;

    auto read = [&](std::size_t count) {
      std::vector<Scalar> v(count);
      for (auto& x : v)
        if (!(ls >> x)) throw ParseError("malformed " + tag + " record", line_no);
      return v;
    };
    auto read_id = [&]() {
      std::int64_t id;
      if (!(ls >> id)) throw ParseError("malformed " + tag + " record", line_no);
      return id;
    };

    if (tag == "VERTEX_SE2") {
      set_dim(2, line_no);
      const auto i = vertex(read_id());
      const auto v = read(3);
      init[i] = Pose{Eigen::Vector2d(v[0], v[1]), rotation2d(v[2])};
    } else if (tag == "VERTEX_SE3:QUAT") {
      set_dim(3, line_no);
      const auto i = vertex(read_id());
      const auto v = read(7);
      init[i] = Pose{Eigen::Vector3d(v[0], v[1], v[2]),
                     detail::quaternion_to_rotation(v[3], v[4], v[5], v[6], line_no)};
    } else if (tag == "EDGE_SE2") {
      set_dim(2, line_no);
      const auto a = read_id(), b = read_id();
      const auto v = read(3 + 6);
      RelativePoseMeasurement m;
      m.tail = vertex(a);
      m.head = vertex(b);
      if (m.tail == m.head) throw ParseError("self-loop edge", line_no);
      m.translation = Eigen::Vector2d(v[0], v[1]);
      m.rotation = rotation2d(v[2]);
      const Matrix info = detail::unpack_upper({v.begin() + 3, v.end()}, 3);
      std::tie(m.tau, m.kappa) = detail::collapse_information(info, 2, rule, line_no);
      edges.push_back(std::move(m));
    } else if (tag == "EDGE_SE3:QUAT") {
      set_dim(3, line_no);
      const auto a = read_id(), b = read_id();
      const auto v = read(7 + 21);
      RelativePoseMeasurement m;
      m.tail = vertex(a);
      m.head = vertex(b);
      if (m.tail == m.head) throw ParseError("self-loop edge", line_no);
      m.translation = Eigen::Vector3d(v[0], v[1], v[2]);
      m.rotation = detail::quaternion_to_rotation(v[3], v[4], v[5], v[6], line_no);
      const Matrix info = detail::unpack_upper({v.begin() + 7, v.end()}, 6);
      std::tie(m.tau, m.kappa) = detail::collapse_information(info, 3, rule, line_no);
      edges.push_back(std::move(m));
    } else {
      throw ParseError("unsupported record type '" + tag + "'", line_no);
    }
  }
  if (d == 0 || ids.empty()) throw ParseError("no pose-graph records found");

  MeasurementGraph g(d, ids.size(), std::move(edges));
  g.set_vertex_ids(std::move(ids));
  g.set_initial_estimates(std::move(init));
  return g;
}

inline MeasurementGraph parse_g2o(const std::string& path, const InformationRule& rule = {}) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path + "'");
  return parse_g2o(in, rule);
}

/// Writes the graph as g2o records. Information blocks are isotropic: tau * I for the
/// translation and (kappa / rotational_scale) * I for the rotation, so parse_g2o inverts
/// this exactly. VERTEX records are emitted only when poses are supplied.
inline void write_g2o(const MeasurementGraph& g, const std::vector<Pose>* poses, std::ostream& out,
                      const InformationRule& rule = {}) {
  const int d = g.dim();
  if (poses) require_dims(poses->size() == g.num_poses(), "write_g2o: pose count mismatch");
  out << std::setprecision(17);
  if (poses) {
    for (std::size_t i = 0; i < g.num_poses(); ++i) {
      const Pose& p = (*poses)[i];
      if (d == 2) {
        out << "VERTEX_SE2 " << g.vertex_id(i) << ' ' << p.t[0] << ' ' << p.t[1] << ' '
            << std::atan2(p.R(1, 0), p.R(0, 0)) << '\n';
      } else {
        const auto q = detail::rotation_to_quaternion(p.R);
        out << "VERTEX_SE3:QUAT " << g.vertex_id(i) << ' ' << p.t[0] << ' ' << p.t[1] << ' ' << p.t[2];
        for (int k = 0; k < 4; ++k) out << ' ' << q[k];
        out << '\n';
      }
    }
  }
  for (const auto& m : g.measurements()) {
    const int rot_dim = d == 2 ? 1 : 3;
    Matrix info = Matrix::Zero(d + rot_dim, d + rot_dim);
    info.topLeftCorner(d, d).diagonal().setConstant(m.tau);
    info.bottomRightCorner(rot_dim, rot_dim).diagonal().setConstant(m.kappa / rule.rotational_scale);
    if (d == 2) {
      out << "EDGE_SE2 " << g.vertex_id(m.tail) << ' ' << g.vertex_id(m.head) << ' ' << m.translation[0]
          << ' ' << m.translation[1] << ' ' << std::atan2(m.rotation(1, 0), m.rotation(0, 0));
    } else {
      const auto q = detail::rotation_to_quaternion(m.rotation);
      out << "EDGE_SE3:QUAT " << g.vertex_id(m.tail) << ' ' << g.vertex_id(m.head);
      for (int k = 0; k < 3; ++k) out << ' ' << m.translation[k];
      for (int k = 0; k < 4; ++k) out << ' ' << q[k];
    }
    for (int r = 0; r < info.rows(); ++r)
      for (int c = r; c < info.cols(); ++c) out << ' ' << info(r, c);
    out << '\n';
  }
  if (!out) throw Error("write_g2o: I/O failure");
}

inline void write_g2o(const MeasurementGraph& g, const std::vector<Pose>* poses, const std::string& path,
                      const InformationRule& rule = {}) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  write_g2o(g, poses, out, rule);
}

}  // namespace certsync
