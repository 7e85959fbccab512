// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace sdcons::sdp {

/// M(θ) = constant + Σ_j θ_j · coefficients[j], required negative definite.
struct AffineMatrixConstraint {
  Eigen::MatrixXd constant;
  std::vector<Eigen::MatrixXd> coefficients;

  int dimension() const noexcept { return static_cast<int>(constant.rows()); }
  Eigen::MatrixXd evaluate(std::span<const double> theta) const;
};

enum class Status { feasible, not_found };

struct FeasibilityResult {
  Status status = Status::not_found;
  std::vector<double> point;
  /// max over constraints of λ_max(M_c(point)).
  double worst_margin = 0.0;
  long iterations = 0;
};

inline constexpr double kDefaultMargin = 1e-6;

struct Options {
  long budget = 200'000;  ///< total objective evaluations across restarts
  int restarts = 8;
  std::uint64_t seed = 0;
  double margin = kDefaultMargin;
  /// Subgradient iterations without improvement before switching to the
  /// smoothed phase.
  long stall_window = 10'000;
  /// Starting point of the first restart; later restarts perturb it.
  std::optional<std::vector<double>> initial;
};

/// λ_max of every constraint at θ, computed from scratch.
std::vector<double> constraint_margins(std::span<const AffineMatrixConstraint> constraints,
                                       std::span<const double> theta);

/// f(θ) = max_c λ_max(M_c(θ)).
double objective(std::span<const AffineMatrixConstraint> constraints,
                 std::span<const double> theta);

/// Searches the slice Σ_{j∈normalization} θ_j = 1 for a point with
/// f(θ) ≤ −margin. Projected subgradient descent with c/√k steps, falling back
/// to a log-sum-exp smoothed objective (smoothing 1e-3 → 1e-6, quasi-Newton)
/// when the subgradient phase stalls. `not_found` only means the budget ran
/// out; it is not a proof of infeasibility.
FeasibilityResult feasibility(std::span<const AffineMatrixConstraint> constraints,
                              std::span<const int> normalization, const Options& options);

}  // namespace sdcons::sdp
