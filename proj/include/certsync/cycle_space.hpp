#pragma once

#include <algorithm>
#include <queue>
#include <utility>
#include <vector>

#include "certsync/graph.hpp"

namespace certsync {

/// A set of independent directed circuits; entry +1 means the edge is traversed along its
/// orientation and -1 against it.
struct CycleBasis {
  std::size_t num_edges = 0;
  std::vector<std::vector<std::pair<std::size_t, int>>> circuits;

  std::size_t count() const { return circuits.size(); }

  /// Dense m x nu signed circuit matrix Gamma.
  Eigen::MatrixXi dense() const {
    Eigen::MatrixXi G = Eigen::MatrixXi::Zero(num_edges, circuits.size());
    for (std::size_t c = 0; c < circuits.size(); ++c)
      for (auto [e, s] : circuits[c]) G(e, c) += s;
    return G;
  }
};

/// Fundamental circuits of a breadth-first spanning tree rooted at vertex 0.
inline CycleBasis fundamental_cycle_basis(const MeasurementGraph& g) {
  const std::size_t n = g.num_poses(), m = g.num_measurements();
  std::vector<std::vector<std::pair<std::size_t, std::size_t>>> adj(n);  // (neighbor, edge)
  for (std::size_t e = 0; e < m; ++e) {
    const auto& meas = g.measurement(e);
    adj[meas.tail].emplace_back(meas.head, e);
    adj[meas.head].emplace_back(meas.tail, e);
  }
  constexpr auto none = static_cast<std::size_t>(-1);
  std::vector<std::size_t> parent(n, none), parent_edge(n, none), depth(n, 0);
  std::vector<bool> seen(n, false), tree_edge(m, false);
  std::queue<std::size_t> q;
  q.push(0);
  seen[0] = true;
  while (!q.empty()) {
    const auto u = q.front();
    q.pop();
    for (auto [v, e] : adj[u]) {
      if (seen[v]) continue;
      seen[v] = true;
      parent[v] = u;
      parent_edge[v] = e;
      depth[v] = depth[u] + 1;
      tree_edge[e] = true;
      q.push(v);
    }
  }

  CycleBasis basis;
  basis.num_edges = m;
  for (std::size_t e = 0; e < m; ++e) {
    if (tree_edge[e]) continue;
    const auto& meas = g.measurement(e);
    std::vector<std::pair<std::size_t, int>> circuit{{e, +1}};
    // Close the loop by walking the tree from head back to tail.
    std::size_t a = meas.head, b = meas.tail;
    std::vector<std::pair<std::size_t, int>> down;
    while (a != b) {
      if (depth[a] >= depth[b]) {
        const auto f = parent_edge[a];
        circuit.emplace_back(f, g.measurement(f).tail == a ? +1 : -1);
        a = parent[a];
      } else {
        const auto f = parent_edge[b];
        down.emplace_back(f, g.measurement(f).head == b ? +1 : -1);
        b = parent[b];
      }
    }
    circuit.insert(circuit.end(), down.rbegin(), down.rend());
    basis.circuits.push_back(std::move(circuit));
  }
  return basis;
}

/// Dense projector onto ker(A Omega^1/2), assembled from the scaled circuit matrix
/// Omega^-1/2 Gamma. Only for m <= 500.
inline Matrix projector_via_cycles(const MeasurementGraph& g, const Vector& omega) {
  const auto m = static_cast<Eigen::Index>(g.num_measurements());
  if (m > 500) throw DimensionError("projector_via_cycles: limited to m <= 500");
  require_dims(omega.size() == m, "projector_via_cycles: weight vector must have m entries");
  const CycleBasis basis = fundamental_cycle_basis(g);
  if (basis.count() == 0) return Matrix::Zero(m, m);
  const Matrix Gw = omega.cwiseSqrt().cwiseInverse().asDiagonal() * basis.dense().cast<Scalar>();
  const Matrix pinv = Gw.completeOrthogonalDecomposition().pseudoInverse();
  return Gw * pinv;
}

/// Closed-form Moore-Penrose pseudoinverse of the incidence matrix of a connected graph:
/// A^+ = A_r^T (A_r A_r^T)^-1 [I - (1/n) 1 1^T, -(1/n) 1]. Only for n <= 500.
inline Matrix incidence_pseudoinverse(const MeasurementGraph& g) {
  const auto n = static_cast<Eigen::Index>(g.num_poses());
  if (n > 500) throw DimensionError("incidence_pseudoinverse: limited to n <= 500");
  const Matrix Ar = Matrix(reduced_incidence_matrix(g));
  Matrix C(n - 1, n);
  C.leftCols(n - 1) = Matrix::Identity(n - 1, n - 1) - Matrix::Constant(n - 1, n - 1, 1.0 / n);
  C.col(n - 1).setConstant(-1.0 / n);
  const Matrix K = Ar * Ar.transpose();
  return Ar.transpose() * K.llt().solve(C);
}

}  // namespace certsync
