// SPDX-License-Identifier: Apache-2.0
#include <Eigen/Eigenvalues>
#include <algorithm>
#include <random>
#include <sstream>

#include "doctest.h"
#include "oracles.hpp"
#include "sdcons/error.hpp"
#include "sdcons/graph.hpp"
#include "sdcons/linalg.hpp"

using namespace sdcons;

namespace {

Topology make(int n, std::initializer_list<Edge> edges) {
  std::vector<Edge> e(edges);
  return Topology::from_edges(n, e);
}

std::string error_of(auto&& f) {
  try {
    f();
  } catch (const InvalidArgument& e) {
    return e.what();
  }
  return "";
}

// all graphs on n nodes from a bitmask over the n(n-1)/2 pairs
std::vector<Edge> edges_from_mask(int n, unsigned mask) {
  std::vector<Edge> out;
  int bit = 0;
  for (int a = 1; a <= n; ++a)
    for (int b = a + 1; b <= n; ++b, ++bit)
      if (mask >> bit & 1u) out.push_back({a, b});
  return out;
}

void check_spectrum_properties(const Topology& t) {
  const auto w = weighted_adjacency(t);
  const auto s = spectrum(t);
  const int n = t.size();
  for (int i = 0; i < n; ++i) CHECK(w.row(i).sum() == doctest::Approx(1.0).epsilon(1e-12));
  for (int i = 0; i < n; ++i) {
    CHECK(s.eigenvalues(i) <= 1.0 + 1e-12);
    CHECK(s.eigenvalues(i) >= -1.0 - 1e-12);
  }
  CHECK(std::abs(s.eigenvalues(0) - 1.0) < 1e-12);
  CHECK(s.eigenvalues(1) < 1.0 - 1e-9);  // simple
  for (int i = 0; i + 1 < n; ++i) CHECK(s.eigenvalues(i) >= s.eigenvalues(i + 1));
  for (int i = 0; i < n; ++i) CHECK(s.modal_matrix(i, 0) == 1.0);
  const Eigen::MatrixXd rebuilt =
      s.modal_matrix * s.eigenvalues.asDiagonal() * s.modal_inverse;
  CHECK((rebuilt - w).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((s.modal_matrix * s.modal_inverse - Eigen::MatrixXd::Identity(n, n))
            .cwiseAbs()
            .maxCoeff() < 1e-10);
}

}  // namespace

TEST_CASE("topology construction") {
  SUBCASE("single edge") {
    const auto t = make(2, {{1, 2}});
    CHECK(t.degrees() == std::vector<int>{1, 1});
    CHECK(t.adjacency()(0, 1) == 1);
    CHECK(t.adjacency()(1, 0) == 1);
  }
  SUBCASE("six-agent graph degrees") {
    const auto t = six_agent_topology();
    CHECK(t.size() == 6);
    CHECK(t.degrees() == std::vector<int>{2, 2, 2, 4, 2, 2});
    CHECK(t.adjacency() == t.adjacency().transpose());
    CHECK(t.adjacency().diagonal().isZero());
  }
  SUBCASE("edges are normalized and sorted") {
    const auto t = make(4, {{3, 1}, {2, 1}, {4, 3}});
    CHECK(t.edges() == std::vector<Edge>{{1, 2}, {1, 3}, {3, 4}});
  }
  SUBCASE("self-loop names the pair") {
    const auto msg = error_of([] { make(3, {{1, 1}}); });
    CHECK(msg.find("self-loop") != std::string::npos);
    CHECK(msg.find("(1,1)") != std::string::npos);
  }
  SUBCASE("out of range") {
    const auto msg = error_of([] { make(3, {{1, 4}}); });
    CHECK(msg.find("(1,4)") != std::string::npos);
    CHECK(!error_of([] { make(3, {{0, 2}}); }).empty());
  }
  SUBCASE("duplicate, in either orientation") {
    const auto msg = error_of([] { make(3, {{1, 2}, {2, 1}}); });
    CHECK(msg.find("duplicate") != std::string::npos);
  }
  SUBCASE("too few agents") { CHECK(!error_of([] { make(1, {}); }).empty()); }
  SUBCASE("digest depends on the edge set only") {
    CHECK(make(3, {{1, 2}, {2, 3}}).digest() == make(3, {{3, 2}, {2, 1}}).digest());
    CHECK(make(3, {{1, 2}, {2, 3}}).digest() != make(3, {{1, 2}, {1, 3}}).digest());
    CHECK(six_agent_topology().digest().size() == 16);
  }
}

TEST_CASE("weighted adjacency") {
  SUBCASE("single edge") {
    Eigen::MatrixXd expected(2, 2);
    expected << 0, 1, 1, 0;
    CHECK(weighted_adjacency(make(2, {{1, 2}})) == expected);
  }
  SUBCASE("triangle") {
    const auto w = weighted_adjacency(make(3, {{1, 2}, {1, 3}, {2, 3}}));
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) CHECK(w(i, j) == (i == j ? 0.0 : 0.5));
  }
  SUBCASE("six-agent row 4") {
    const auto w = weighted_adjacency(six_agent_topology());
    for (int j : {0, 1, 2, 4}) CHECK(w(3, j) == 0.25);
    CHECK(w(3, 3) == 0.0);
    CHECK(w(3, 5) == 0.0);
  }
  SUBCASE("isolated node is named") {
    const auto msg = error_of([] { weighted_adjacency(make(3, {{1, 2}})); });
    CHECK(msg.find("node 3") != std::string::npos);
  }
}

TEST_CASE("connectivity") {
  CHECK(is_connected(six_agent_topology()));
  CHECK_FALSE(is_connected(make(4, {{1, 2}, {3, 4}})));
  CHECK(is_connected(make(2, {{1, 2}})));
  CHECK_FALSE(is_connected(make(3, {{1, 2}})));
}

TEST_CASE("spectrum examples") {
  SUBCASE("single edge") {
    const auto s = spectrum(make(2, {{1, 2}}));
    CHECK(s.eigenvalues(0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(s.eigenvalues(1) == doctest::Approx(-1.0).epsilon(1e-14));
  }
  SUBCASE("triangle") {
    const auto s = spectrum(make(3, {{1, 2}, {1, 3}, {2, 3}}));
    CHECK(s.eigenvalues(0) == doctest::Approx(1.0).epsilon(1e-13));
    CHECK(s.eigenvalues(1) == doctest::Approx(-0.5).epsilon(1e-13));
    CHECK(s.eigenvalues(2) == doctest::Approx(-0.5).epsilon(1e-13));
  }
  SUBCASE("six-agent graph against Sturm bisection and a dense solver") {
    const auto t = six_agent_topology();
    const auto s = spectrum(t);
    Eigen::VectorXd d(6);
    for (int i = 0; i < 6; ++i) d(i) = 1.0 / std::sqrt(double(t.degrees()[i]));
    const Eigen::MatrixXd sym = d.asDiagonal() * t.adjacency().cast<double>() * d.asDiagonal();
    const auto sturm = oracle::sturm_eigenvalues(sym);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> dense(sym);
    for (int i = 0; i < 6; ++i) {
      CHECK(std::abs(s.eigenvalues(i) - sturm[i]) < 1e-10);
      CHECK(std::abs(s.eigenvalues(i) - dense.eigenvalues()(5 - i)) < 1e-10);
    }
    CHECK(s.eigenvalues(0) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(s.eigenvalues(1) < 1.0);
    CHECK(s.eigenvalues(5) >= -1.0);
    // closed forms: 1, cos(2pi/7)-ish values, 0, -1/2
    const double expected[6] = {1, 0.62348980185873, 0, -0.22252093395631, -0.5,
                                -0.90096886790242};
    for (int i = 0; i < 6; ++i) CHECK(std::abs(s.eigenvalues(i) - expected[i]) < 1e-12);
    check_spectrum_properties(t);
  }
  SUBCASE("disconnected graph is rejected") {
    CHECK_THROWS_AS(spectrum(make(4, {{1, 2}, {3, 4}})), InvalidArgument);
  }
}

TEST_CASE("spectrum properties on every connected graph up to 5 nodes") {
  int connected = 0;
  for (int n = 2; n <= 5; ++n) {
    const unsigned pairs = n * (n - 1) / 2;
    for (unsigned mask = 1; mask < (1u << pairs); ++mask) {
      const auto edges = edges_from_mask(n, mask);
      const auto t = Topology::from_edges(n, edges);
      if (!is_connected(t)) continue;
      ++connected;
      check_spectrum_properties(t);
    }
  }
  CHECK(connected == 1 + 4 + 38 + 728);
}

TEST_CASE("spectrum properties on random connected graphs") {
  std::mt19937_64 rng(42);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = std::uniform_int_distribution<int>(2, 8)(rng);
    const auto t = oracle::random_connected(rng, n);
    CHECK(is_connected(t));
    check_spectrum_properties(t);

    // relabeling keeps the multiset of eigenvalues
    std::vector<int> perm(n);
    for (int i = 0; i < n; ++i) perm[i] = i + 1;
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<Edge> relabeled;
    for (auto e : t.edges()) relabeled.push_back({perm[e.a - 1], perm[e.b - 1]});
    const auto a = spectrum(t).eigenvalues;
    const auto b = spectrum(Topology::from_edges(n, relabeled)).eigenvalues;
    CHECK((a - b).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("edge list parsing") {
  std::istringstream in("# paper graph\n1 2\n1 4\n\n2 4\n3 4 # hub\n3 6\n4 5\n5 6\n");
  const auto t = parse_edge_list(in);
  CHECK(t.size() == 6);
  CHECK(t.digest() == six_agent_topology().digest());

  std::istringstream padded("1 2\n");
  CHECK(parse_edge_list(padded, 3).size() == 3);

  std::istringstream bad("1 2\n2 x\n");
  CHECK_THROWS_AS(parse_edge_list(bad), InvalidArgument);
}

TEST_CASE("max_eig_sym") {
  SUBCASE("diagonal") {
    Eigen::MatrixXd a = Eigen::Vector3d(3, 1, 2).asDiagonal();
    const auto p = max_eig_sym(a);
    CHECK(p.value == 3.0);
    CHECK(std::abs(std::abs(p.vector(0)) - 1.0) < 1e-15);
  }
  SUBCASE("swap matrix") {
    Eigen::MatrixXd a(2, 2);
    a << 0, 1, 1, 0;
    const auto p = max_eig_sym(a);
    CHECK(p.value == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(std::abs(std::abs(p.vector(0)) - 1 / std::sqrt(2.0)) < 1e-14);
    CHECK(std::abs(p.vector(0) - p.vector(1)) < 1e-14);
  }
  SUBCASE("random 6x6 against Sturm bisection") {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 200; ++trial) {
      const auto a = oracle::random_symmetric(rng, 6, 3.0);
      const auto p = max_eig_sym(a);
      CHECK(std::abs(p.value - oracle::sturm_eigenvalues(a)[0]) < 1e-10);
      CHECK(std::abs(p.vector.norm() - 1.0) < 1e-12);
      CHECK((a * p.vector - p.value * p.vector).norm() < 1e-10);
    }
  }
  SUBCASE("asymmetry is rejected") {
    Eigen::MatrixXd a(2, 2);
    a << 0, 1, 1 + 1e-9, 0;
    CHECK_THROWS_AS(max_eig_sym(a), InvalidArgument);
  }
  SUBCASE("dimension limit") {
    CHECK_THROWS_AS(max_eig_sym(Eigen::MatrixXd::Identity(17, 17)), InvalidArgument);
  }
}

TEST_CASE("jacobi eigen decomposition") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const int n = 2 + trial % 7;
    const auto a = oracle::random_symmetric(rng, n);
    const auto e = jacobi_eigen(a);
    CHECK((e.vectors * e.values.asDiagonal() * e.vectors.transpose() - a).cwiseAbs().maxCoeff() <
          1e-11);
    CHECK((e.vectors.transpose() * e.vectors - Eigen::MatrixXd::Identity(n, n))
              .cwiseAbs()
              .maxCoeff() < 1e-12);
    for (int i = 0; i + 1 < n; ++i) CHECK(e.values(i) >= e.values(i + 1));
  }
  SUBCASE("repeated call is bitwise identical") {
    const auto a = oracle::random_symmetric(rng, 6);
    const auto x = jacobi_eigen(a), y = jacobi_eigen(a);
    CHECK(x.values == y.values);
    CHECK(x.vectors == y.vectors);
  }
}
