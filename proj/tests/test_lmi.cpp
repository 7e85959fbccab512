// SPDX-License-Identifier: Apache-2.0
#include <Eigen/Eigenvalues>
#include <cmath>
#include <random>

#include "doctest.h"
#include "json.hpp"
#include "oracles.hpp"
#include "sdcons/error.hpp"
#include "sdcons/lmi.hpp"

using namespace sdcons;
using namespace sdcons::lmi;

namespace {

const Gains kGains = Gains::make(1, 2);

Variables identity_vars() {
  Variables v;
  v.P = v.S = v.R = Eigen::Matrix2d::Identity();
  return v;
}

Variables random_vars(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0, 1);
  std::vector<double> x(Variables::kCount);
  for (auto& e : x) e = n(rng);
  return Variables::from_vector(x);
}

double dense_max(const Eigen::MatrixXd& m) {
  return Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(m).eigenvalues().maxCoeff();
}

ModeSetup setup(double lambda, double alpha, FormOptions forms = {}) {
  return ModeSetup{kGains, Coupling::full_pd, lambda, 1.0, alpha, forms};
}

ModeCertificate certified(double lambda, double alpha, FormOptions forms = {},
                          Coupling c = Coupling::full_pd) {
  CertifyOptions o;
  o.forms = forms;
  auto r = certify_mode(kGains, c, lambda, 1.0, alpha, o);
  REQUIRE(std::holds_alternative<ModeCertificate>(r));
  return std::get<ModeCertificate>(r);
}

}  // namespace

TEST_CASE("psi blocks at the identity") {
  for (auto psi22 : {Psi22Form::lemma, Psi22Form::corrected}) {
    FormOptions forms;
    forms.psi22 = psi22;
    auto s = setup(0.0, 0.0, forms);
    const auto at0 = psi_blocks(s, 0.0, identity_vars());
    Eigen::Matrix2d e11;
    e11 << -1, 0, 0, -5;
    CHECK(at0.psi11 == e11);
    CHECK(at0.psi22 == -Eigen::Matrix2d::Identity());
    s.lambda = 1.0;
    Eigen::Matrix2d e12;
    e12 << 1, 0, 1, 3;
    CHECK(psi_blocks(s, 0.0, identity_vars()).psi12 == e12);
  }
  CHECK_THROWS_AS(psi_blocks(setup(0.5, 0.1), -0.1, identity_vars()), InvalidArgument);
}

TEST_CASE("psi block forms") {
  std::mt19937_64 rng(1);
  const auto v = random_vars(rng);
  FormOptions lemma, derivation, printed;
  derivation.psi12 = Psi12Form::derivation;
  printed.psi22 = Psi22Form::lemma;
  SUBCASE("forms coincide without the tau terms") {
    const auto a = psi_blocks(setup(0.4, 0.2, lemma), 0.0, v);
    const auto b = psi_blocks(setup(0.4, 0.2, derivation), 0.0, v);
    const auto c = psi_blocks(setup(0.4, 0.2, printed), 0.0, v);
    CHECK(a.psi12 == b.psi12);
    CHECK(a.psi22 == c.psi22);
  }
  SUBCASE("forms differ with them") {
    const auto a = psi_blocks(setup(0.4, 0.2, lemma), 1.0, v);
    const auto b = psi_blocks(setup(0.4, 0.2, derivation), 1.0, v);
    const auto c = psi_blocks(setup(0.4, 0.2, printed), 1.0, v);
    CHECK((a.psi12 - b.psi12).norm() > 1e-3);
    // the two lower-right forms differ by exactly 4 alpha tau S
    CHECK(((c.psi22 - a.psi22) + 4 * 0.2 * v.S).cwiseAbs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("LMI matrices") {
  std::mt19937_64 rng(2);
  SUBCASE("exact symmetry") {
    for (int i = 0; i < 100; ++i) {
      const auto p = lmi_matrices(setup(0.3, 0.25), random_vars(rng));
      CHECK(p.first == p.first.transpose());
      CHECK(p.second == p.second.transpose());
    }
  }
  SUBCASE("affine in the 17 variables") {
    for (int i = 0; i < 50; ++i) {
      const auto s = setup(-0.7, 0.3);
      const auto v1 = random_vars(rng), v2 = random_vars(rng);
      auto sum = v1.to_vector();
      const auto x2 = v2.to_vector();
      for (int j = 0; j < Variables::kCount; ++j) sum[j] += x2[j];
      const auto a = lmi_matrices(s, Variables::from_vector(sum));
      const auto b = lmi_matrices(s, v1), c = lmi_matrices(s, v2), z = lmi_matrices(s, Variables{});
      CHECK((a.first - b.first - c.first + z.first).cwiseAbs().maxCoeff() < 1e-13);
      CHECK((a.second - b.second - c.second + z.second).cwiseAbs().maxCoeff() < 1e-13);

      // finite differences along each coordinate equal the solver's coefficients
      const auto cons = mode_constraints(s);
      const auto base = v1.to_vector();
      const auto at = lmi_matrices(s, v1);
      for (int j = 0; j < Variables::kCount; ++j) {
        auto bumped = base;
        bumped[j] += 1.0;
        const auto next = lmi_matrices(s, Variables::from_vector(bumped));
        CHECK((next.first - at.first - cons[3].coefficients[j]).cwiseAbs().maxCoeff() < 1e-13);
        CHECK((next.second - at.second - cons[4].coefficients[j]).cwiseAbs().maxCoeff() < 1e-13);
      }
    }
  }
  SUBCASE("homogeneous") {
    for (int i = 0; i < 20; ++i) {
      const auto s = setup(0.6, 0.2);
      const auto v = random_vars(rng);
      auto x = v.to_vector();
      for (auto& e : x) e *= 3.5;
      const auto scaled = Variables::from_vector(x);
      const auto a = lmi_matrices(s, v), b = lmi_matrices(s, scaled);
      CHECK((b.first - 3.5 * a.first).cwiseAbs().maxCoeff() < 1e-12);
      CHECK((b.second - 3.5 * a.second).cwiseAbs().maxCoeff() < 1e-12);
      const auto ma = constraint_margins(s, v), mb = constraint_margins(s, scaled);
      for (int k = 0; k < 5; ++k) CHECK(mb[k] == doctest::Approx(3.5 * ma[k]).epsilon(1e-10));
    }
  }
  SUBCASE("bordered block layout") {
    const auto v = random_vars(rng);
    const auto s = setup(0.1, 0.2);
    const auto p = lmi_matrices(s, v);
    CHECK(p.second.block<2, 2>(0, 4) == v.Q1);
    CHECK(p.second.block<2, 2>(2, 4) == v.Q2);
    CHECK((p.second.block<2, 2>(4, 4) + 0.6 * v.R).cwiseAbs().maxCoeff() < 1e-15);
  }
  SUBCASE("decay rate bound") {
    CHECK_THROWS_AS(lmi_matrices(setup(0.1, 0.5), identity_vars()), InvalidArgument);
    CHECK_THROWS_AS(lmi_matrices(setup(0.1, 0.6), identity_vars()), InvalidArgument);
  }
}

TEST_CASE("mode certification") {
  SUBCASE("uncoupled mode at 0.38") {
    for (auto psi22 : {Psi22Form::corrected, Psi22Form::lemma}) {
      FormOptions forms;
      forms.psi22 = psi22;
      const auto c = certified(0.0, 0.38, forms);
      for (double m : c.margins) CHECK(m <= -1e-6);
      CHECK(c.variables.P.trace() == doctest::Approx(1.0).epsilon(1e-12));
      const auto s = setup(0.0, 0.38, forms);
      const auto again = constraint_margins(s, c.variables);
      for (int k = 0; k < 5; ++k) CHECK(again[k] == c.margins[k]);
      // independent dense check
      const auto p = lmi_matrices(s, c.variables);
      CHECK(dense_max(p.first) <= -1e-6);
      CHECK(dense_max(p.second) <= -1e-6);
      CHECK(dense_max(-c.variables.P) <= -1e-6);
    }
  }
  SUBCASE("preconditions") {
    CHECK_THROWS_AS(certify_mode(kGains, Coupling::full_pd, 0.5, 1.0, 0.6), InvalidArgument);
    CHECK_THROWS_AS(certify_mode(kGains, Coupling::full_pd, 1.0, 1.0, 0.1), InvalidArgument);
    CHECK_THROWS_AS(certify_mode(kGains, Coupling::full_pd, -1.2, 1.0, 0.1), InvalidArgument);
    CHECK_THROWS_AS(certify_mode(kGains, Coupling::full_pd, 0.5, 1.0, 0.0), InvalidArgument);
  }
  SUBCASE("Schur complement of the bordered form is negative definite") {
    for (double lambda : {-0.9, -0.5, 0.0, 0.6}) {
      const auto c = certified(lambda, 0.1);
      CHECK(dense_max(bordered_schur_complement(setup(lambda, 0.1), c.variables)) < 0);
    }
  }
  SUBCASE("re-evaluating at smaller alpha") {
    const auto c = certified(-0.5, 0.15);
    for (double alpha : {0.1, 0.05, 0.01}) {
      const auto m = constraint_margins(setup(-0.5, alpha), c.variables);
      for (double v : m) CHECK(v < 0);
    }
  }
}

TEST_CASE("network certification") {
  SUBCASE("triangle needs a single mode") {
    const auto k3 = Topology::from_edges(3, std::vector<Edge>{{1, 2}, {1, 3}, {2, 3}});
    auto r = certify_network(k3, kGains, Coupling::full_pd, 1.0, 0.1);
    REQUIRE(std::holds_alternative<ConsensusCertificate>(r));
    const auto& c = std::get<ConsensusCertificate>(r);
    REQUIRE(c.modes.size() == 1);
    CHECK(c.modes[0].multiplicity == 2);
    CHECK(c.modes[0].lambda == doctest::Approx(-0.5));
    CHECK(reverify(c));
  }
  SUBCASE("six agents at a modest rate") {
    const auto topo = six_agent_topology();
    auto r = certify_network(topo, kGains, Coupling::full_pd, 1.0, 0.1);
    REQUIRE(std::holds_alternative<ConsensusCertificate>(r));
    const auto& c = std::get<ConsensusCertificate>(r);
    CHECK(c.modes.size() == 5);
    for (std::size_t i = 1; i < c.modes.size(); ++i) CHECK(c.modes[i].lambda < c.modes[i - 1].lambda);
    CHECK(c.topology_digest == topo.digest());
    CHECK(reverify(c));
    for (const auto& m : c.modes)
      CHECK(dense_max(bordered_schur_complement(setup(m.lambda, 0.1), m.variables)) < 0);

    const auto doc = nlohmann::json::parse(to_json(c));
    CHECK(doc["status"] == "feasible");
    CHECK(doc["variant"] == "full_pd");
    CHECK(doc["psi12_variant"] == "lemma");
    CHECK(doc["psi22_variant"] == "corrected");
    CHECK(doc["modes"].size() == 5);
    for (std::size_t i = 0; i < 5; ++i) {
      const auto& m = doc["modes"][i];
      CHECK(m["lambda"].get<double>() == c.modes[i].lambda);
      for (int r2 = 0; r2 < 2; ++r2)
        for (int k = 0; k < 2; ++k) {
          CHECK(m["P"][r2][k].get<double>() == c.modes[i].variables.P(r2, k));
          CHECK(m["Q2"][r2][k].get<double>() == c.modes[i].variables.Q2(r2, k));
        }
      for (const char* key : {"neg_P", "neg_S", "neg_R", "lmi1", "lmi2"})
        CHECK(m["margins"][key].get<double>() <= -1e-6);
      CHECK(m["solver_iterations"].get<long>() > 0);
    }
  }
  SUBCASE("tampered certificates fail re-verification") {
    auto r = certify_network(six_agent_topology(), kGains, Coupling::full_pd, 1.0, 0.1);
    auto c = std::get<ConsensusCertificate>(r);
    c.modes[2].variables.P *= -1;
    CHECK_FALSE(reverify(c));
  }
  SUBCASE("not_found names the failing eigenvalue") {
    CertifyOptions o;
    o.solver.budget = 20000;
    const auto topo = six_agent_topology();
    auto r = certify_network(topo, kGains, Coupling::full_pd, 1.0, 0.45, o);
    REQUIRE(std::holds_alternative<NetworkNotFound>(r));
    const auto& f = std::get<NetworkNotFound>(r);
    CHECK(f.failing.lambda == doctest::Approx(spectrum(topo).eigenvalues(1)));
    CHECK(f.failing.best_margin > -1e-6);
    const auto doc = nlohmann::json::parse(
        to_json(f, topo, kGains, Coupling::full_pd, 1.0, FormOptions{}));
    CHECK(doc["status"] == "not_found");
    CHECK(doc["failing_lambda"].get<double>() == f.failing.lambda);
  }
  SUBCASE("rejections") {
    const auto split = Topology::from_edges(4, std::vector<Edge>{{1, 2}, {3, 4}});
    CHECK_THROWS_AS(certify_network(split, kGains, Coupling::full_pd, 1.0, 0.1), InvalidArgument);
    CHECK_THROWS_AS(certify_network(six_agent_topology(), kGains, Coupling::full_pd, 1.0, 0.5),
                    InvalidArgument);
  }
}

TEST_CASE("maximum decay rate") {
  SUBCASE("triangle") {
    const auto k3 = Topology::from_edges(3, std::vector<Edge>{{1, 2}, {1, 3}, {2, 3}});
    const auto best = max_alpha(k3, kGains, Coupling::full_pd, 1.0, 1e-2);
    REQUIRE(best.has_value());
    CHECK(best->alpha > kAlphaLowerBracket);
    CHECK(best->alpha < 0.5);
    CHECK(best->certificate.alpha == best->alpha);
    CHECK(reverify(best->certificate));
    CHECK(best->bisection_steps >= 5);
    // a certified rate cannot beat the simulated decay of the mode
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const auto sched = SamplingSchedule::sample(seed, 0.1, 1.0, 40.0);
      const auto y =
          simulate_mode(kGains, Coupling::full_pd, -0.5, sched, Eigen::Vector2d(1, 0), 0.05, 40.0);
      std::vector<std::pair<double, double>> series;
      for (const auto& s : y) series.emplace_back(s.t, s.y.norm());
      CHECK(oracle::log_slope(series) <= -best->alpha + 0.02);
    }
  }
  SUBCASE("bipartite graphs have no certificate at tau_bar = 1") {
    // lambda = -1 is stable under this sampling but the conditions are
    // infeasible already at the lower bracket
    const auto pair = Topology::from_edges(2, std::vector<Edge>{{1, 2}});
    CertifyOptions o;
    o.solver.budget = 40000;
    CHECK_FALSE(max_alpha(pair, kGains, Coupling::full_pd, 1.0, 1e-2, o).has_value());
  }
  SUBCASE("tolerance must be positive") {
    CHECK_THROWS_AS(max_alpha(six_agent_topology(), kGains, Coupling::full_pd, 1.0, 0.0),
                    InvalidArgument);
  }
}

TEST_CASE("Lyapunov-Krasovskii functional") {
  SUBCASE("at the sampling instant only the quadratic term remains") {
    std::vector<ModeSample> one{{0.0, Eigen::Vector2d(1, 0), true}};
    const auto r = lk_check(setup(0.5, 0.1), identity_vars(), one);
    CHECK(r.values.front() == 1.0);
  }
  SUBCASE("at tau = tau_bar the delay terms vanish") {
    const Eigen::Vector2d yk(0.3, -0.8);
    const auto samples = dense_interval(kGains, Coupling::full_pd, 0.5, yk, 1.0, 101);
    Variables v = identity_vars();
    v.P << 2, 0.3, 0.3, 1;
    const auto r = lk_check(setup(0.5, 0.1), v, samples);
    const auto& y = samples.back().y;
    CHECK(r.values.back() == doctest::Approx(y.dot(v.P * y)).epsilon(1e-14));
    CHECK(r.jump_nonincreasing);
  }
  SUBCASE("interval longer than tau_bar is rejected") {
    const auto samples = dense_interval(kGains, Coupling::full_pd, 0.5, Eigen::Vector2d(1, 0), 1.5, 11);
    CHECK_THROWS_AS(lk_check(setup(0.5, 0.1), identity_vars(), samples), InvalidArgument);
  }
  SUBCASE("certified modes decay on random intervals") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(0, 1);
    for (double lambda : {0.62348980185873, -0.90096886790242}) {
      const auto c = certified(lambda, 0.12);
      for (int trial = 0; trial < 20; ++trial) {
        const double th = 2 * M_PI * u(rng);
        const double T = 1e-3 + (1 - 1e-3) * u(rng);
        const auto s = dense_interval(kGains, Coupling::full_pd, lambda,
                                      Eigen::Vector2d(std::cos(th), std::sin(th)), T, 2001);
        const auto r = lk_check(setup(lambda, 0.12), c.variables, s);
        CHECK(r.ok);
        CHECK(r.jump_nonincreasing);
      }
    }
  }
  SUBCASE("the printed lower-right block admits functionals that grow") {
    // certificate for the leading mode well above its true decay rate
    FormOptions printed;
    printed.psi22 = Psi22Form::lemma;
    const double lambda = 0.62348980185873, alpha = 0.3;
    const auto c = certified(lambda, alpha, printed);
    std::mt19937_64 rng(10);
    std::uniform_real_distribution<double> u(0, 1);
    int violations = 0;
    for (int trial = 0; trial < 100; ++trial) {
      const double th = 2 * M_PI * u(rng);
      const double T = 1e-3 + (1 - 1e-3) * u(rng);
      const auto s = dense_interval(kGains, Coupling::full_pd, lambda,
                                    Eigen::Vector2d(std::cos(th), std::sin(th)), T, 2001);
      violations += !lk_check(setup(lambda, alpha, printed), c.variables, s).ok;
    }
    CHECK(violations > 0);
  }
}
