// SPDX-License-Identifier: Apache-2.0
#include "sdcons/uem.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sdcons/error.hpp"

namespace sdcons {

double beta(const Gains& gains, double T) {
  if (!(T >= 0)) throw InvalidArgument("beta: T must be non-negative");
  return free_response(gains, T).u;
}

double mu(const Gains& gains, double T) {
  if (!(T >= 0)) throw InvalidArgument("mu: T must be non-negative");
  // Integrating the ODE once: u̇(T) + k_d(u(T) − 1) + k_p∫u = 0, u̇ = −k_p w.
  const auto [u, w] = free_response(gains, T);
  return w + gains.k_d * (1.0 - u) / gains.k_p;
}

double mu_bound(const Gains& gains, double tau_bar) {
  if (!(tau_bar > 0)) throw InvalidArgument("mu_bound: tau_bar must be positive");
  double bound = gains.k_d / gains.k_p;
  constexpr int kGrid = 1000;
  for (int i = 1; i <= kGrid; ++i)
    bound = std::max(bound, std::abs(mu(gains, tau_bar * i / kGrid)));
  return bound;
}

Eigen::Matrix2d UemProduct::matrix() const {
  Eigen::Matrix2d m;
  m << 1.0, position_gain, 0.0, velocity_gain;
  return m;
}

void UemProduct::append(double beta_value, double mu_value) {
  position_gain += mu_value * velocity_gain;
  velocity_gain *= beta_value;
  ++intervals;
}

UemProduct uem_product(const Gains& gains, const SamplingSchedule& schedule,
                       std::size_t k) {
  if (k > schedule.interval_count())
    throw InvalidArgument("uem_product: k = " + std::to_string(k) +
                          " exceeds the schedule's " +
                          std::to_string(schedule.interval_count()) + " intervals");
  UemProduct p;
  for (std::size_t m = 0; m < k; ++m) {
    const double T = schedule.interval(m);
    p.append(beta(gains, T), mu(gains, T));
  }
  return p;
}

double consensus_value(const Gains& gains, const SamplingSchedule& schedule,
                       double z0, double zdot0, double tolerance) {
  if (!(tolerance > 0)) throw InvalidArgument("consensus_value: tolerance must be positive");
  if (zdot0 == 0.0) return z0;
  const double bound = mu_bound(gains, schedule.tau_bar());
  UemProduct p;
  const std::size_t limit = std::min(schedule.interval_count(), kConsensusIterationBudget);
  for (std::size_t m = 0; m < limit; ++m) {
    if (std::abs(p.velocity_gain) * bound < tolerance) return z0 + p.position_gain * zdot0;
    const double T = schedule.interval(m);
    p.append(beta(gains, T), mu(gains, T));
  }
  if (std::abs(p.velocity_gain) * bound < tolerance) return z0 + p.position_gain * zdot0;
  throw NumericalError("consensus_value: not converged after " +
                           std::to_string(p.intervals) +
                           " intervals; extend the schedule",
                       std::abs(p.velocity_gain) * bound);
}

}  // namespace sdcons
