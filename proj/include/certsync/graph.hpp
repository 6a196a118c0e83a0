#pragma once

#include <cstdint>
#include <numeric>
#include <optional>
#include <unordered_map>
#include <utility>
#include <vector>

#include "certsync/pose.hpp"
#include "certsync/types.hpp"

namespace certsync {

/// One noisy relative-pose observation x_ij = x_i^-1 x_j along the directed edge tail -> head.
struct RelativePoseMeasurement {
  std::size_t tail = 0;
  std::size_t head = 0;
  Vector translation;  // t_ij
  Matrix rotation;     // R_ij in SO(d)
  Scalar tau = 1.0;    // translational precision
  Scalar kappa = 1.0;  // rotational concentration
};

enum class WeightKind { translational, rotational };

/// Immutable directed measurement network over n poses in SE(d).
///
/// The stored edge direction is the orientation used by every matrix constructed
/// downstream. Parallel edges are allowed; self-loops are not.
class MeasurementGraph {
 public:
  MeasurementGraph() = default;

  /// Validates the measurements and the connectivity of the underlying undirected graph.
  MeasurementGraph(int d, std::size_t n, std::vector<RelativePoseMeasurement> edges)
      : d_(d), n_(n), edges_(std::move(edges)) {
    if (d_ != 2 && d_ != 3) throw DimensionError("MeasurementGraph: d must be 2 or 3");
    if (n_ == 0) throw DimensionError("MeasurementGraph: empty graph");
    for (std::size_t e = 0; e < edges_.size(); ++e) validate(edges_[e], e);
    if (!connected()) throw ConnectivityError("measurement graph is not connected");
    vertex_ids_.resize(n_);
    std::iota(vertex_ids_.begin(), vertex_ids_.end(), std::int64_t{0});
  }

  int dim() const { return d_; }
  std::size_t num_poses() const { return n_; }
  std::size_t num_measurements() const { return edges_.size(); }
  const std::vector<RelativePoseMeasurement>& measurements() const { return edges_; }
  const RelativePoseMeasurement& measurement(std::size_t e) const { return edges_.at(e); }

  /// Original (file) id of internal vertex i.
  std::int64_t vertex_id(std::size_t i) const { return vertex_ids_.at(i); }
  const std::vector<std::int64_t>& vertex_ids() const { return vertex_ids_; }
  std::optional<std::size_t> index_of(std::int64_t id) const {
    if (id_lookup_.empty()) {
      if (id >= 0 && static_cast<std::size_t>(id) < n_ && vertex_ids_[id] == id)
        return static_cast<std::size_t>(id);
      return std::nullopt;
    }
    auto it = id_lookup_.find(id);
    if (it == id_lookup_.end()) return std::nullopt;
    return it->second;
  }

  /// Initial estimates read from VERTEX records, if any.
  const std::vector<std::optional<Pose>>& initial_estimates() const { return initial_; }

  void set_vertex_ids(std::vector<std::int64_t> ids) {
    require_dims(ids.size() == n_, "set_vertex_ids: size mismatch");
    vertex_ids_ = std::move(ids);
    id_lookup_.clear();
    for (std::size_t i = 0; i < n_; ++i) id_lookup_[vertex_ids_[i]] = i;
  }
  void set_initial_estimates(std::vector<std::optional<Pose>> init) {
    require_dims(init.size() == n_, "set_initial_estimates: size mismatch");
    initial_ = std::move(init);
  }

 private:
  void validate(const RelativePoseMeasurement& m, std::size_t e) const {
    const std::string where = "measurement " + std::to_string(e) + ": ";
    if (m.tail >= n_ || m.head >= n_) throw DimensionError(where + "vertex index out of range");
    if (m.tail == m.head) throw Error(where + "self-loop");
    if (m.translation.size() != d_ || m.rotation.rows() != d_ || m.rotation.cols() != d_)
      throw DimensionError(where + "wrong measurement dimension");
    if (!is_rotation(m.rotation, 1e-9)) throw Error(where + "rotation is not in SO(d)");
    if (!(m.tau > 0) || !std::isfinite(m.tau)) throw Error(where + "tau must be positive");
    if (!(m.kappa >= 0) || !std::isfinite(m.kappa)) throw Error(where + "kappa must be nonnegative");
    if (!m.translation.allFinite()) throw Error(where + "non-finite translation");
  }

  bool connected() const {
    std::vector<std::size_t> parent(n_);
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    auto find = [&](std::size_t x) {
      while (parent[x] != x) x = parent[x] = parent[parent[x]];
      return x;
    };
    std::size_t components = n_;
    for (const auto& m : edges_) {
      auto a = find(m.tail), b = find(m.head);
      if (a != b) {
        parent[a] = b;
        --components;
      }
    }
    return components == 1;
  }

  int d_ = 0;
  std::size_t n_ = 0;
  std::vector<RelativePoseMeasurement> edges_;
  std::vector<std::int64_t> vertex_ids_;
  std::unordered_map<std::int64_t, std::size_t> id_lookup_;
  std::vector<std::optional<Pose>> initial_;
};

/// Oriented incidence matrix A (n x m): +1 at head(e), -1 at tail(e).
inline SparseMatrix incidence_matrix(const MeasurementGraph& g) {
  const auto n = static_cast<Eigen::Index>(g.num_poses());
  const auto m = static_cast<Eigen::Index>(g.num_measurements());
  std::vector<Triplet> trips;
  trips.reserve(2 * m);
  for (Eigen::Index e = 0; e < m; ++e) {
    const auto& meas = g.measurement(e);
    trips.emplace_back(static_cast<Eigen::Index>(meas.tail), e, -1.0);
    trips.emplace_back(static_cast<Eigen::Index>(meas.head), e, 1.0);
  }
  SparseMatrix A(n, m);
  A.setFromTriplets(trips.begin(), trips.end());
  return A;
}

/// Incidence matrix with its final row removed; full row rank n - 1 for connected graphs.
inline SparseMatrix reduced_incidence_matrix(const MeasurementGraph& g) {
  const auto n = static_cast<Eigen::Index>(g.num_poses());
  const auto m = static_cast<Eigen::Index>(g.num_measurements());
  std::vector<Triplet> trips;
  trips.reserve(2 * m);
  for (Eigen::Index e = 0; e < m; ++e) {
    const auto& meas = g.measurement(e);
    if (static_cast<Eigen::Index>(meas.tail) < n - 1)
      trips.emplace_back(static_cast<Eigen::Index>(meas.tail), e, -1.0);
    if (static_cast<Eigen::Index>(meas.head) < n - 1)
      trips.emplace_back(static_cast<Eigen::Index>(meas.head), e, 1.0);
  }
  SparseMatrix A(n - 1, m);
  A.setFromTriplets(trips.begin(), trips.end());
  return A;
}

inline Vector edge_weights(const MeasurementGraph& g, WeightKind which) {
  Vector w(g.num_measurements());
  for (std::size_t e = 0; e < g.num_measurements(); ++e)
    w[e] = which == WeightKind::translational ? g.measurement(e).tau : g.measurement(e).kappa;
  return w;
}

/// Laplacian of the translational (tau) or rotational (kappa) weight graph.
inline SparseMatrix weight_graph_laplacian(const MeasurementGraph& g, WeightKind which) {
  const auto n = static_cast<Eigen::Index>(g.num_poses());
  std::vector<Triplet> trips;
  trips.reserve(4 * g.num_measurements());
  for (const auto& meas : g.measurements()) {
    const Scalar w = which == WeightKind::translational ? meas.tau : meas.kappa;
    const auto i = static_cast<Eigen::Index>(meas.tail), j = static_cast<Eigen::Index>(meas.head);
    trips.emplace_back(i, i, w);
    trips.emplace_back(j, j, w);
    trips.emplace_back(i, j, -w);
    trips.emplace_back(j, i, -w);
  }
  SparseMatrix L(n, n);
  L.setFromTriplets(trips.begin(), trips.end());
  return L;
}

}  // namespace certsync
