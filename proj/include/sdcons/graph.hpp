// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace sdcons {

/// Undirected edge between 1-based node indices.
struct Edge {
  int a = 0;
  int b = 0;
  friend bool operator==(const Edge&, const Edge&) = default;
};

/// Undirected simple communication graph.
class Topology {
 public:
  /// Validates and builds the graph. Rejects self-loops, out-of-range
  /// indices and duplicate edges (in either orientation), naming the pair.
  static Topology from_edges(int n, std::span<const Edge> edges);

  int size() const noexcept { return n_; }
  const Eigen::MatrixXi& adjacency() const noexcept { return adjacency_; }
  const std::vector<int>& degrees() const noexcept { return degrees_; }
  const std::vector<Edge>& edges() const noexcept { return edges_; }

  /// Stable 64-bit FNV-1a digest of the node count and sorted edge set.
  std::string digest() const;

 private:
  Topology() = default;
  int n_ = 0;
  Eigen::MatrixXi adjacency_;
  std::vector<int> degrees_;
  std::vector<Edge> edges_;
};

/// W_d = Δ⁻¹A_d. Throws InvalidArgument naming the first isolated node.
Eigen::MatrixXd weighted_adjacency(const Topology& topology);

/// Breadth-first search from node 1.
bool is_connected(const Topology& topology);

/// Eigen-decomposition W_d = T Λ T⁻¹ with eigenvalues sorted descending.
/// The first column of T is exactly the all-ones vector and the first row of
/// T⁻¹ is the degree-weighted average δᵀ/Σδ.
struct Spectrum {
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd modal_matrix;
  Eigen::MatrixXd modal_inverse;
};

Spectrum spectrum(const Topology& topology);

/// Parses "i j" pairs, one per line, 1-based. Blank lines and text after '#'
/// are ignored. When `n` is absent the node count is the largest index seen.
Topology parse_edge_list(std::istream& in, std::optional<int> n = std::nullopt);

/// Six-agent graph used throughout the examples and the reproduce command.
Topology six_agent_topology();

}  // namespace sdcons
