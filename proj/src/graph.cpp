// SPDX-License-Identifier: Apache-2.0
#include "sdcons/graph.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <queue>
#include <sstream>

#include "sdcons/error.hpp"
#include "sdcons/linalg.hpp"

namespace sdcons {
namespace {

std::string pair_text(const Edge& e) {
  return "(" + std::to_string(e.a) + "," + std::to_string(e.b) + ")";
}

}  // namespace

Topology Topology::from_edges(int n, std::span<const Edge> edges) {
  if (n < 2) throw InvalidArgument("topology: need at least 2 agents, got " +
                                   std::to_string(n));
  Topology t;
  t.n_ = n;
  t.adjacency_ = Eigen::MatrixXi::Zero(n, n);
  t.degrees_.assign(static_cast<std::size_t>(n), 0);
  for (const Edge& e : edges) {
    if (e.a < 1 || e.a > n || e.b < 1 || e.b > n)
      throw InvalidArgument("topology: edge " + pair_text(e) +
                            " has an index outside [1," + std::to_string(n) +
                            "]");
    if (e.a == e.b)
      throw InvalidArgument("topology: self-loop " + pair_text(e));
    if (t.adjacency_(e.a - 1, e.b - 1) != 0)
      throw InvalidArgument("topology: duplicate edge " + pair_text(e));
    t.adjacency_(e.a - 1, e.b - 1) = 1;
    t.adjacency_(e.b - 1, e.a - 1) = 1;
    ++t.degrees_[static_cast<std::size_t>(e.a - 1)];
    ++t.degrees_[static_cast<std::size_t>(e.b - 1)];
    t.edges_.push_back({std::min(e.a, e.b), std::max(e.a, e.b)});
  }
  std::sort(t.edges_.begin(), t.edges_.end(), [](const Edge& l, const Edge& r) {
    return l.a != r.a ? l.a < r.a : l.b < r.b;
  });
  return t;
}

std::string Topology::digest() const {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](std::uint64_t value) {
    for (int byte = 0; byte < 8; ++byte) {
      h ^= (value >> (8 * byte)) & 0xffU;
      h *= 1099511628211ULL;
    }
  };
  mix(static_cast<std::uint64_t>(n_));
  for (const Edge& e : edges_) {
    mix(static_cast<std::uint64_t>(e.a));
    mix(static_cast<std::uint64_t>(e.b));
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

Eigen::MatrixXd weighted_adjacency(const Topology& topology) {
  const int n = topology.size();
  Eigen::MatrixXd w(n, n);
  for (int i = 0; i < n; ++i) {
    const int degree = topology.degrees()[static_cast<std::size_t>(i)];
    if (degree < 1)
      throw InvalidArgument("weighted_adjacency: node " + std::to_string(i + 1) +
                            " is isolated");
    for (int j = 0; j < n; ++j)
      w(i, j) = topology.adjacency()(i, j) / static_cast<double>(degree);
  }
  return w;
}

bool is_connected(const Topology& topology) {
  const int n = topology.size();
  std::vector<bool> seen(static_cast<std::size_t>(n), false);
  std::queue<int> frontier;
  frontier.push(0);
  seen[0] = true;
  int reached = 1;
  while (!frontier.empty()) {
    const int i = frontier.front();
    frontier.pop();
    for (int j = 0; j < n; ++j) {
      if (topology.adjacency()(i, j) && !seen[static_cast<std::size_t>(j)]) {
        seen[static_cast<std::size_t>(j)] = true;
        ++reached;
        frontier.push(j);
      }
    }
  }
  return reached == n;
}

Spectrum spectrum(const Topology& topology) {
  if (!is_connected(topology))
    throw InvalidArgument("spectrum: graph is not connected");
  const int n = topology.size();
  Eigen::VectorXd degree(n);
  for (int i = 0; i < n; ++i)
    degree(i) = topology.degrees()[static_cast<std::size_t>(i)];
  const Eigen::VectorXd inv_sqrt = degree.cwiseSqrt().cwiseInverse();
  const Eigen::VectorXd sqrt_deg = degree.cwiseSqrt();

  // N = Δ^{-1/2} A_d Δ^{-1/2} is symmetric and similar to W_d.
  const Eigen::MatrixXd normalized = inv_sqrt.asDiagonal() *
                                     topology.adjacency().cast<double>() *
                                     inv_sqrt.asDiagonal();
  const SymmetricEigen eig = jacobi_eigen(normalized);

  Spectrum s;
  s.eigenvalues = eig.values;
  s.modal_matrix = inv_sqrt.asDiagonal() * eig.vectors;
  s.modal_inverse = eig.vectors.transpose() * sqrt_deg.asDiagonal();

  s.modal_matrix.col(0).setOnes();
  s.modal_inverse.row(0) = degree.transpose() / degree.sum();
  return s;
}

Topology parse_edge_list(std::istream& in, std::optional<int> n) {
  std::vector<Edge> edges;
  std::string line;
  int line_no = 0;
  int largest = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream fields(line);
    Edge e;
    if (!(fields >> e.a)) {
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      throw InvalidArgument("edge list line " + std::to_string(line_no) +
                            ": expected two integers");
    }
    std::string trailing;
    if (!(fields >> e.b) || (fields >> trailing))
      throw InvalidArgument("edge list line " + std::to_string(line_no) +
                            ": expected two integers");
    largest = std::max({largest, e.a, e.b});
    edges.push_back(e);
  }
  return Topology::from_edges(n.value_or(largest), edges);
}

Topology six_agent_topology() {
  const Edge edges[] = {{1, 2}, {1, 4}, {2, 4}, {3, 4}, {3, 6}, {4, 5}, {5, 6}};
  return Topology::from_edges(6, edges);
}

}  // namespace sdcons
