// SPDX-License-Identifier: Apache-2.0
#include "sdcons/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>
#include <string>

#include "sdcons/error.hpp"
#include "sdcons/io.hpp"

namespace sdcons {

Gains Gains::make(double k_p, double k_d) {
  if (!(std::isfinite(k_p) && k_p > 0))
    throw InvalidArgument("gains: k_p must be positive, got " + std::to_string(k_p));
  if (!(std::isfinite(k_d) && k_d > 0))
    throw InvalidArgument("gains: k_d must be positive, got " + std::to_string(k_d));
  return Gains{k_p, k_d};
}

DiscriminantSign Gains::regime() const noexcept {
  const double sigma = discriminant();
  if (std::abs(sigma) < 1e-9 * std::max(1.0, k_d * k_d)) return DiscriminantSign::zero;
  return sigma > 0 ? DiscriminantSign::positive : DiscriminantSign::negative;
}

Eigen::Matrix2d system_matrix(const Gains& g) {
  Eigen::Matrix2d a;
  a << 0.0, 1.0, -g.k_p, -g.k_d;
  return a;
}

Eigen::Matrix2d input_matrix(const Gains& g, Coupling coupling) {
  Eigen::Matrix2d b;
  b << 0.0, 0.0, g.k_p, coupling == Coupling::full_pd ? g.k_d : 0.0;
  return b;
}

// ---------------------------------------------------------------------------
// Sampling schedules

SamplingSchedule SamplingSchedule::from_instants(std::vector<double> instants,
                                                 double tau_bar, double tau_min) {
  if (!(std::isfinite(tau_bar) && tau_bar > 0))
    throw InvalidArgument("schedule: tau_bar must be positive");
  if (instants.empty() || instants.front() != 0.0)
    throw InvalidArgument("schedule: instants must start at t_0 = 0");
  double smallest = tau_bar;
  for (std::size_t k = 0; k + 1 < instants.size(); ++k) {
    const double gap = instants[k + 1] - instants[k];
    if (!(gap > 0))
      throw InvalidArgument("schedule: instants not strictly increasing at k=" +
                            std::to_string(k + 1));
    if (gap > tau_bar * (1 + 1e-12))
      throw InvalidArgument("schedule: gap " + std::to_string(gap) + " at k=" +
                            std::to_string(k) + " exceeds tau_bar");
    smallest = std::min(smallest, gap);
  }
  SamplingSchedule s;
  s.instants_ = std::move(instants);
  s.tau_bar_ = tau_bar;
  s.tau_min_ = tau_min > 0 ? tau_min : smallest;
  return s;
}

SamplingSchedule SamplingSchedule::sample(std::uint64_t seed, double tau_min,
                                          double tau_bar, double horizon) {
  if (!(std::isfinite(tau_min) && tau_min > 0))
    throw InvalidArgument("schedule: tau_min must be positive");
  if (!(std::isfinite(tau_bar) && tau_min <= tau_bar))
    throw InvalidArgument("schedule: tau_min must not exceed tau_bar");
  if (!(std::isfinite(horizon) && horizon > 0))
    throw InvalidArgument("schedule: horizon must be positive");
  std::mt19937_64 rng(seed);
  std::vector<double> instants{0.0};
  while (instants.back() < horizon) {
    const double unit = static_cast<double>(rng() >> 11) * 0x1.0p-53;
    instants.push_back(instants.back() + tau_min + (tau_bar - tau_min) * unit);
  }
  SamplingSchedule s;
  s.instants_ = std::move(instants);
  s.tau_min_ = tau_min;
  s.tau_bar_ = tau_bar;
  return s;
}

SamplingSchedule SamplingSchedule::periodic(double period, double horizon) {
  if (!(std::isfinite(period) && period > 0))
    throw InvalidArgument("schedule: period must be positive");
  if (!(std::isfinite(horizon) && horizon > 0))
    throw InvalidArgument("schedule: horizon must be positive");
  std::vector<double> instants{0.0};
  for (std::size_t k = 1; instants.back() < horizon; ++k)
    instants.push_back(static_cast<double>(k) * period);
  SamplingSchedule s;
  s.instants_ = std::move(instants);
  s.tau_min_ = period;
  s.tau_bar_ = period;
  return s;
}

// ---------------------------------------------------------------------------
// Closed-form propagators

FreeResponse free_response(const Gains& g, double t) {
  const double nu = g.k_d / 2.0;
  switch (g.regime()) {
    case DiscriminantSign::zero: {
      const double decay = std::exp(-nu * t);
      return {decay * (1.0 + nu * t), t * decay};
    }
    case DiscriminantSign::positive: {
      const double omega = std::sqrt(g.discriminant());
      const double slow = -g.k_p / (nu + omega);  // s₁ = ω − ν without cancellation
      const double fast = -(nu + omega);          // s₂
      const double e_slow = std::exp(slow * t), e_fast = std::exp(fast * t);
      const double cosh_part = 0.5 * (e_slow + e_fast);
      const double sinh_part = omega * t < 1.0 ? std::exp(-nu * t) * std::sinh(omega * t)
                                               : 0.5 * (e_slow - e_fast);
      return {cosh_part + (nu / omega) * sinh_part, sinh_part / omega};
    }
    case DiscriminantSign::negative: {
      const double omega = std::sqrt(-g.discriminant());
      const double decay = std::exp(-nu * t);
      const double c = std::cos(omega * t), s = std::sin(omega * t);
      return {decay * (c + (nu / omega) * s), decay * s / omega};
    }
  }
  return {1.0, 0.0};
}

Eigen::Matrix2d expm2(const Gains& g, double dt) {
  if (!(dt >= 0)) throw InvalidArgument("expm2: dt must be non-negative");
  const auto [u, w] = free_response(g, dt);
  Eigen::Matrix2d e;
  e << u, w, -g.k_p * w, u - g.k_d * w;
  return e;
}

Eigen::Matrix2d held_input_gain(const Gains& g, double dt) {
  Eigen::Matrix2d a_inv;
  a_inv << -g.k_d / g.k_p, -1.0 / g.k_p, 1.0, 0.0;
  return a_inv * (expm2(g, dt) - Eigen::Matrix2d::Identity());
}

Eigen::Matrix2d step_matrix(const Gains& g, Coupling coupling, double lambda,
                            double dt) {
  return expm2(g, dt) + held_input_gain(g, dt) * (lambda * input_matrix(g, coupling));
}

// ---------------------------------------------------------------------------
// Simulation

std::vector<OutputTime> output_times(const SamplingSchedule& schedule,
                                     double grid_step, double horizon) {
  if (!(std::isfinite(grid_step) && grid_step > 0))
    throw InvalidArgument("simulate: grid_step must be positive");
  if (!(std::isfinite(horizon) && horizon >= 0))
    throw InvalidArgument("simulate: horizon must be non-negative");
  std::vector<OutputTime> times;
  const auto count = static_cast<std::size_t>(std::floor(horizon / grid_step + 1e-9));
  for (std::size_t i = 0; i <= count; ++i)
    times.push_back({std::min(static_cast<double>(i) * grid_step, horizon), false});
  for (double t : schedule.instants())
    if (t <= horizon + 1e-12) times.push_back({t, true});
  std::stable_sort(times.begin(), times.end(), [](const OutputTime& a, const OutputTime& b) {
    return a.t < b.t;
  });
  std::vector<OutputTime> merged;
  for (const OutputTime& ot : times) {
    if (!merged.empty() && std::abs(ot.t - merged.back().t) <= 1e-12) {
      if (ot.is_sample) merged.back() = ot;
      continue;
    }
    merged.push_back(ot);
  }
  return merged;
}

namespace {

void check_schedule_covers(const SamplingSchedule& schedule, double horizon) {
  if (schedule.size() == 0 || schedule.horizon() < horizon - 1e-12)
    throw InvalidArgument("simulate: schedule ends at " +
                          std::to_string(schedule.size() ? schedule.horizon() : 0.0) +
                          " before the horizon " + std::to_string(horizon));
}

void check_initial_state(const Topology& topology, const Eigen::VectorXd& x0,
                         const Eigen::VectorXd& v0) {
  if (x0.size() != topology.size() || v0.size() != topology.size())
    throw InvalidArgument("simulate: initial state has dimension " +
                          std::to_string(x0.size()) + "/" + std::to_string(v0.size()) +
                          ", expected " + std::to_string(topology.size()));
  if (!x0.allFinite() || !v0.allFinite())
    throw InvalidArgument("simulate: initial state must be finite");
}

// Walks the output times, advancing the held sample at each instant and
// evaluating the state at elapsed time s since the last instant.
template <class State, class Advance, class Emit>
void propagate(const SamplingSchedule& schedule, const std::vector<OutputTime>& times,
               State sample, Advance advance, Emit emit) {
  const auto& instants = schedule.instants();
  std::size_t k = 0;
  for (const OutputTime& ot : times) {
    while (k + 1 < instants.size() && instants[k + 1] <= ot.t + 1e-12) {
      sample = advance(sample, schedule.interval(k));
      ++k;
    }
    const double elapsed = std::max(0.0, ot.t - instants[k]);
    emit(ot, instants[k] == ot.t || elapsed == 0.0 ? sample : advance(sample, elapsed));
  }
}

struct StackedState {
  Eigen::VectorXd x;
  Eigen::VectorXd v;
};

}  // namespace

Trajectory simulate(const Topology& topology, const Gains& gains, Coupling coupling,
                    const SamplingSchedule& schedule, const Eigen::VectorXd& x0,
                    const Eigen::VectorXd& v0, double grid_step, double horizon) {
  if (!is_connected(topology))
    throw InvalidArgument("simulate: graph is not connected");
  check_initial_state(topology, x0, v0);
  check_schedule_covers(schedule, horizon);
  const Eigen::MatrixXd w = weighted_adjacency(topology);
  const Eigen::Matrix2d b = input_matrix(gains, coupling);

  auto advance = [&](const StackedState& held, double s) {
    const Eigen::Matrix2d e = expm2(gains, s);
    const Eigen::Matrix2d g = held_input_gain(gains, s) * b;
    const Eigen::VectorXd wx = w * held.x, wv = w * held.v;
    return StackedState{e(0, 0) * held.x + e(0, 1) * held.v + g(0, 0) * wx + g(0, 1) * wv,
                        e(1, 0) * held.x + e(1, 1) * held.v + g(1, 0) * wx + g(1, 1) * wv};
  };

  Trajectory out{{}, schedule, gains, coupling};
  propagate(schedule, output_times(schedule, grid_step, horizon), StackedState{x0, v0},
            advance, [&](const OutputTime& ot, const StackedState& st) {
              out.states.push_back({ot.t, st.x, st.v, ot.is_sample});
            });
  return out;
}

Trajectory simulate_modal(const Topology& topology, const Gains& gains,
                          Coupling coupling, const SamplingSchedule& schedule,
                          const Eigen::VectorXd& x0, const Eigen::VectorXd& v0,
                          double grid_step, double horizon) {
  check_initial_state(topology, x0, v0);
  check_schedule_covers(schedule, horizon);
  const Spectrum spec = spectrum(topology);  // rejects disconnected graphs
  const auto n = static_cast<Eigen::Index>(topology.size());

  // Row i holds mode i as (z_i, ż_i).
  using Modes = Eigen::Matrix<double, Eigen::Dynamic, 2>;
  Modes modes0(n, 2);
  modes0.col(0) = spec.modal_inverse * x0;
  modes0.col(1) = spec.modal_inverse * v0;

  auto advance = [&](const Modes& held, double s) {
    Modes next(n, 2);
    for (Eigen::Index i = 0; i < n; ++i)
      next.row(i) = (step_matrix(gains, coupling, spec.eigenvalues(i), s) *
                     held.row(i).transpose())
                        .transpose();
    return next;
  };

  Trajectory out{{}, schedule, gains, coupling};
  propagate(schedule, output_times(schedule, grid_step, horizon), modes0, advance,
            [&](const OutputTime& ot, const Modes& m) {
              out.states.push_back({ot.t, spec.modal_matrix * m.col(0),
                                    spec.modal_matrix * m.col(1), ot.is_sample});
            });
  return out;
}

std::vector<ModeSample> simulate_mode(const Gains& gains, Coupling coupling,
                                      double lambda, const SamplingSchedule& schedule,
                                      const Eigen::Vector2d& y0, double grid_step,
                                      double horizon) {
  check_schedule_covers(schedule, horizon);
  std::vector<ModeSample> out;
  propagate(
      schedule, output_times(schedule, grid_step, horizon), Eigen::Vector2d(y0),
      [&](const Eigen::Vector2d& held, double s) -> Eigen::Vector2d {
        return step_matrix(gains, coupling, lambda, s) * held;
      },
      [&](const OutputTime& ot, const Eigen::Vector2d& y) {
        out.push_back({ot.t, y, ot.is_sample});
      });
  return out;
}

std::vector<double> disagreement(const Trajectory& trajectory) {
  std::vector<double> out;
  out.reserve(trajectory.states.size());
  for (const NetworkState& s : trajectory.states) {
    const Eigen::VectorXd dx = s.x.array() - s.x.mean();
    const Eigen::VectorXd dv = s.v.array() - s.v.mean();
    out.push_back(std::sqrt(dx.squaredNorm() + dv.squaredNorm()));
  }
  return out;
}

// ---------------------------------------------------------------------------
// CSV export

void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory) {
  const Eigen::Index n = trajectory.states.empty() ? 0 : trajectory.states.front().x.size();
  out << "t";
  for (Eigen::Index i = 1; i <= n; ++i) out << ",x" << i;
  for (Eigen::Index i = 1; i <= n; ++i) out << ",v" << i;
  out << ",is_sample\n";
  for (const NetworkState& s : trajectory.states) {
    out << io::format_number(s.t);
    for (Eigen::Index i = 0; i < n; ++i) out << ',' << io::format_number(s.x(i));
    for (Eigen::Index i = 0; i < n; ++i) out << ',' << io::format_number(s.v(i));
    out << ',' << (s.is_sample ? 1 : 0) << '\n';
  }
}

void write_schedule_csv(std::ostream& out, const SamplingSchedule& schedule) {
  out << "k,t_k\n";
  for (std::size_t k = 0; k < schedule.size(); ++k)
    out << k << ',' << io::format_number(schedule.instants()[k]) << '\n';
}

void write_disagreement_csv(std::ostream& out, const Trajectory& trajectory) {
  out << "t,disagreement\n";
  const auto values = disagreement(trajectory);
  for (std::size_t i = 0; i < values.size(); ++i)
    out << io::format_number(trajectory.states[i].t) << ','
        << io::format_number(values[i]) << '\n';
}

}  // namespace sdcons
