// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <cstddef>

#include "sdcons/dynamics.hpp"

namespace sdcons {

// The λ = 1 (unitary eigenvalue) mode advances over an interval of length T
// by M(T) = [[1, μ(T)], [0, β(T)]], where β(T) = u(T) and μ(T) = ∫₀ᵀ u for the
// free response u of ü + k_d u̇ + k_p u = 0, u(0) = 1, u̇(0) = 0.

/// Velocity contraction factor over an interval of length T ≥ 0.
double beta(const Gains& gains, double T);

/// Position increment factor over an interval of length T ≥ 0.
double mu(const Gains& gains, double T);

/// sup |μ(T)| over a 1000-point grid on (0, tau_bar], and the T → ∞ limit
/// k_d/k_p, whichever is larger.
double mu_bound(const Gains& gains, double tau_bar);

/// Accumulated M(T_{k−1})⋯M(T_0). The (1,1) entry is 1 and the (2,1) entry
/// is 0 by construction, so only the free entries are stored.
struct UemProduct {
  double position_gain = 0.0;  ///< Σ μ_m ∏_{j<m} β_j
  double velocity_gain = 1.0;  ///< ∏ β_j
  std::size_t intervals = 0;

  Eigen::Matrix2d matrix() const;
  /// Left-multiplies by M(T).
  void append(double beta_value, double mu_value);
};

/// Product over the first `k` intervals of the schedule.
UemProduct uem_product(const Gains& gains, const SamplingSchedule& schedule,
                       std::size_t k);

inline constexpr std::size_t kConsensusIterationBudget = 1'000'000;

/// Limit position γ = z0 + Π̄·ż0 of the unitary mode. Iterates the product
/// until |∏β|·mu_bound < tolerance. Throws NumericalError if the schedule or
/// the iteration budget runs out first.
double consensus_value(const Gains& gains, const SamplingSchedule& schedule,
                       double z0, double zdot0, double tolerance);

}  // namespace sdcons
