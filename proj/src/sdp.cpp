// SPDX-License-Identifier: Apache-2.0
#include "sdcons/sdp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "sdcons/error.hpp"
#include "sdcons/linalg.hpp"

namespace sdcons::sdp {

Eigen::MatrixXd AffineMatrixConstraint::evaluate(std::span<const double> theta) const {
  Eigen::MatrixXd m = constant;
  for (std::size_t j = 0; j < coefficients.size(); ++j)
    if (theta[j] != 0.0) m.noalias() += theta[j] * coefficients[j];
  return m;
}

std::vector<double> constraint_margins(std::span<const AffineMatrixConstraint> constraints,
                                       std::span<const double> theta) {
  std::vector<double> out;
  out.reserve(constraints.size());
  for (const auto& c : constraints) out.push_back(max_eigenvalue(c.evaluate(theta)));
  return out;
}

double objective(std::span<const AffineMatrixConstraint> constraints,
                 std::span<const double> theta) {
  const auto m = constraint_margins(constraints, theta);
  return *std::max_element(m.begin(), m.end());
}

namespace {

using Vec = Eigen::VectorXd;

class Problem {
 public:
  Problem(std::span<const AffineMatrixConstraint> constraints, std::span<const int> norm)
      : constraints_(constraints), norm_(norm.begin(), norm.end()) {
    dim_ = static_cast<int>(constraints.front().coefficients.size());
  }

  int dim() const { return dim_; }

  void project_point(Vec& theta) const {
    if (norm_.empty()) return;
    double sum = 0;
    for (int j : norm_) sum += theta(j);
    const double shift = (1.0 - sum) / static_cast<double>(norm_.size());
    for (int j : norm_) theta(j) += shift;
  }

  void project_direction(Vec& g) const {
    if (norm_.empty()) return;
    double sum = 0;
    for (int j : norm_) sum += g(j);
    const double mean = sum / static_cast<double>(norm_.size());
    for (int j : norm_) g(j) -= mean;
  }

  // Max eigenvalue and a subgradient from the active constraint.
  double max_with_subgradient(const Vec& theta, Vec& grad) const {
    double best = -std::numeric_limits<double>::infinity();
    const AffineMatrixConstraint* active = nullptr;
    Eigen::VectorXd active_vec;
    for (const auto& c : constraints_) {
      auto top = max_eig_sym(c.evaluate({theta.data(), static_cast<std::size_t>(dim_)}));
      if (top.value > best) {
        best = top.value;
        active = &c;
        active_vec = std::move(top.vector);
      }
    }
    grad.resize(dim_);
    for (int j = 0; j < dim_; ++j)
      grad(j) = active_vec.dot(active->coefficients[static_cast<std::size_t>(j)] * active_vec);
    return best;
  }

  // Log-sum-exp over every eigenvalue of every constraint; also reports the
  // exact max eigenvalue seen.
  double smoothed(const Vec& theta, double smoothing, Vec& grad, double& exact_max) const {
    struct Pair {
      double value;
      const AffineMatrixConstraint* c;
      Eigen::VectorXd v;
    };
    std::vector<Pair> pairs;
    exact_max = -std::numeric_limits<double>::infinity();
    for (const auto& c : constraints_) {
      const auto eig = jacobi_eigen(c.evaluate({theta.data(), static_cast<std::size_t>(dim_)}));
      for (Eigen::Index i = 0; i < eig.values.size(); ++i) {
        pairs.push_back({eig.values(i), &c, eig.vectors.col(i)});
        exact_max = std::max(exact_max, eig.values(i));
      }
    }
    double total = 0;
    for (const Pair& p : pairs) total += std::exp((p.value - exact_max) / smoothing);
    grad = Vec::Zero(dim_);
    for (const Pair& p : pairs) {
      const double weight = std::exp((p.value - exact_max) / smoothing) / total;
      if (weight < 1e-17) continue;
      for (int j = 0; j < dim_; ++j)
        grad(j) += weight * p.v.dot(p.c->coefficients[static_cast<std::size_t>(j)] * p.v);
    }
    return exact_max + smoothing * std::log(total);
  }

 private:
  std::span<const AffineMatrixConstraint> constraints_;
  std::vector<int> norm_;
  int dim_ = 0;
};

struct RunState {
  Vec best_point;
  double best_value = std::numeric_limits<double>::infinity();
  long iterations = 0;
  long budget = 0;

  bool exhausted() const { return iterations >= budget; }
  void offer(const Vec& theta, double value) {
    if (value < best_value) {
      best_value = value;
      best_point = theta;
    }
  }
};

// Projected subgradient with c/√k steps. Returns when feasible, stalled or
// out of budget.
void subgradient_phase(const Problem& problem, Vec theta, const Options& options,
                       RunState& state) {
  constexpr double kStepScale = 0.1;
  // Stalled: a whole window fails to halve the gap between the best value
  // and the target −margin.
  double window_gap = std::numeric_limits<double>::infinity();
  Vec grad;
  for (long k = 0; !state.exhausted(); ++k) {
    const double value = problem.max_with_subgradient(theta, grad);
    ++state.iterations;
    state.offer(theta, value);
    if (state.best_value <= -options.margin) return;
    if (k % options.stall_window == 0) {
      const double gap = state.best_value + options.margin;
      if (k > 0 && gap > 0.5 * window_gap) return;
      window_gap = gap;
    }
    problem.project_direction(grad);
    const double norm = grad.norm();
    if (norm == 0.0) return;
    theta -= (kStepScale / std::sqrt(static_cast<double>(k + 1))) * (grad / norm);
    problem.project_point(theta);
  }
}

// Quasi-Newton descent on the smoothed objective with decreasing smoothing.
void smoothed_phase(const Problem& problem, const Options& options, RunState& state) {
  static constexpr double kSmoothing[] = {1e-3, 1e-4, 1e-5, 1e-6};
  const int d = problem.dim();
  Eigen::MatrixXd projector = Eigen::MatrixXd::Identity(d, d);
  for (int j = 0; j < d; ++j) {
    Vec column = projector.col(j);
    problem.project_direction(column);
    projector.col(j) = column;
  }

  Vec theta = state.best_point;
  constexpr int kStages = std::size(kSmoothing);
  for (int stage = 0; stage < kStages && !state.exhausted(); ++stage) {
    const double smoothing = kSmoothing[stage];
    const long stage_end =
        state.iterations + (state.budget - state.iterations) / (kStages - stage);
    Vec grad, trial_grad;
    double exact = 0;
    double value = problem.smoothed(theta, smoothing, grad, exact);
    ++state.iterations;
    state.offer(theta, exact);
    if (state.best_value <= -options.margin) return;
    problem.project_direction(grad);
    Eigen::MatrixXd h = projector;

    while (state.iterations < stage_end) {
      if (grad.norm() < 1e-14) break;
      Vec step = -h * grad;
      double slope = grad.dot(step);
      if (!(slope < 0)) {
        h = projector;
        step = -grad;
        slope = -grad.squaredNorm();
      }
      double t = 1.0;
      bool accepted = false;
      Vec trial;
      double trial_value = 0, trial_exact = 0;
      for (int ls = 0; ls < 50 && state.iterations < stage_end; ++ls, t *= 0.5) {
        trial = theta + t * step;
        problem.project_point(trial);
        trial_value = problem.smoothed(trial, smoothing, trial_grad, trial_exact);
        ++state.iterations;
        state.offer(trial, trial_exact);
        if (state.best_value <= -options.margin) return;
        if (trial_value <= value + 1e-4 * t * slope) {
          accepted = true;
          break;
        }
      }
      if (!accepted) {
        if (h.isApprox(projector)) break;
        h = projector;
        continue;
      }
      problem.project_direction(trial_grad);
      const Vec s = trial - theta;
      const Vec y = trial_grad - grad;
      const double sy = s.dot(y);
      if (sy > 1e-12 * s.norm() * y.norm()) {
        const double rho = 1.0 / sy;
        const Eigen::MatrixXd left = Eigen::MatrixXd::Identity(d, d) - rho * s * y.transpose();
        h = left * h * left.transpose() + rho * s * s.transpose();
      }
      theta = trial;
      grad = trial_grad;
      value = trial_value;
    }
  }
}

}  // namespace

FeasibilityResult feasibility(std::span<const AffineMatrixConstraint> constraints,
                              std::span<const int> normalization, const Options& options) {
  if (constraints.empty()) throw InvalidArgument("feasibility: no constraints");
  const std::size_t d = constraints.front().coefficients.size();
  for (const auto& c : constraints) {
    if (c.coefficients.size() != d)
      throw InvalidArgument("feasibility: constraints disagree on the variable count");
    if (c.constant.rows() != c.constant.cols())
      throw InvalidArgument("feasibility: constraint matrix is not square");
    for (const auto& coeff : c.coefficients)
      if (coeff.rows() != c.constant.rows() || coeff.cols() != c.constant.cols())
        throw InvalidArgument("feasibility: coefficient dimension mismatch");
  }
  for (int j : normalization)
    if (j < 0 || static_cast<std::size_t>(j) >= d)
      throw InvalidArgument("feasibility: normalization index out of range");
  if (options.initial && options.initial->size() != d)
    throw InvalidArgument("feasibility: initial point has wrong dimension");
  if (options.restarts < 1 || options.budget < 1)
    throw InvalidArgument("feasibility: budget and restarts must be positive");

  const Problem problem(constraints, normalization);
  const auto dim = static_cast<Eigen::Index>(d);
  Vec base = Vec::Zero(dim);
  if (options.initial) {
    base = Eigen::Map<const Vec>(options.initial->data(), dim);
  } else {
    for (int j : normalization) base(j) = 1.0 / static_cast<double>(normalization.size());
  }

  FeasibilityResult result;
  result.worst_margin = std::numeric_limits<double>::infinity();
  const long per_restart = std::max(1L, options.budget / options.restarts);
  for (int r = 0; r < options.restarts; ++r) {
    Vec start = base;
    if (r > 0) {
      std::mt19937_64 rng(options.seed + static_cast<std::uint64_t>(r));
      std::normal_distribution<double> noise(0.0, 0.5);
      for (Eigen::Index j = 0; j < dim; ++j) start(j) += noise(rng);
    }
    problem.project_point(start);

    RunState state;
    state.budget = per_restart;
    state.best_point = start;
    subgradient_phase(problem, start, options, state);
    if (state.best_value > -options.margin && !state.exhausted())
      smoothed_phase(problem, options, state);

    result.iterations += state.iterations;
    if (state.best_value < result.worst_margin) {
      result.worst_margin = state.best_value;
      result.point.assign(state.best_point.data(), state.best_point.data() + dim);
    }
    if (result.worst_margin <= -options.margin) break;
  }

  // Independent re-check of the returned point.
  result.worst_margin = objective(constraints, result.point);
  result.status = result.worst_margin <= -options.margin ? Status::feasible : Status::not_found;
  return result;
}

}  // namespace sdcons::sdp
