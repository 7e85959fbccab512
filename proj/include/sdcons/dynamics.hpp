// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <vector>

#include "sdcons/graph.hpp"

namespace sdcons {

enum class DiscriminantSign { negative, zero, positive };

/// PD protocol gains. σ = k_d²/4 − k_p decides the shape of the free
/// response; |σ| < 1e-9·max(1, k_d²) counts as a double root.
struct Gains {
  double k_p = 1.0;
  double k_d = 2.0;

  /// Throws InvalidArgument unless both gains are finite and positive.
  static Gains make(double k_p, double k_d);

  double discriminant() const noexcept { return k_d * k_d / 4.0 - k_p; }
  DiscriminantSign regime() const noexcept;
};

/// Which neighbour information is coupled through the held samples.
enum class Coupling { full_pd, position_only };

/// A = [[0, 1], [−k_p, −k_d]].
Eigen::Matrix2d system_matrix(const Gains& gains);
/// B = [[0, 0], [k_p, k_d]] or B′ = [[0, 0], [k_p, 0]].
Eigen::Matrix2d input_matrix(const Gains& gains, Coupling coupling);

/// Strictly increasing sampling instants starting at 0 with gaps in
/// (0, tau_bar].
class SamplingSchedule {
 public:
  /// Validates an explicit instant list. `tau_min` defaults to the smallest
  /// observed gap.
  static SamplingSchedule from_instants(std::vector<double> instants,
                                        double tau_bar, double tau_min = 0.0);

  /// Gaps drawn uniformly from [tau_min, tau_bar] with a seeded Mersenne
  /// twister until the last instant reaches `horizon`.
  static SamplingSchedule sample(std::uint64_t seed, double tau_min,
                                 double tau_bar, double horizon);

  /// Periodic instants k·period up to and including the first one ≥ horizon.
  static SamplingSchedule periodic(double period, double horizon);

  const std::vector<double>& instants() const noexcept { return instants_; }
  std::size_t size() const noexcept { return instants_.size(); }
  std::size_t interval_count() const noexcept {
    return instants_.empty() ? 0 : instants_.size() - 1;
  }
  /// T_k = t_{k+1} − t_k.
  double interval(std::size_t k) const { return instants_.at(k + 1) - instants_.at(k); }
  double tau_bar() const noexcept { return tau_bar_; }
  double tau_min() const noexcept { return tau_min_; }
  double horizon() const noexcept { return instants_.back(); }

 private:
  std::vector<double> instants_;
  double tau_min_ = 0.0;
  double tau_bar_ = 0.0;
};

/// Free response of ü + k_d u̇ + k_p u = 0: `u` starts at (1, 0) and `w` at
/// (0, 1). Every other closed form in the library is built from these two.
struct FreeResponse {
  double u;
  double w;
};
FreeResponse free_response(const Gains& gains, double t);

/// Exact e^{A·dt} = [[u, w], [−k_p w, u − k_d w]].
Eigen::Matrix2d expm2(const Gains& gains, double dt);

/// ∫₀^dt e^{A s} ds = A⁻¹(e^{A·dt} − I).
Eigen::Matrix2d held_input_gain(const Gains& gains, double dt);

/// One-interval map of ẏ = A y + λ B y(t_k):
/// y(t_k + dt) = [e^{A dt} + A⁻¹(e^{A dt} − I) λ B] y(t_k).
Eigen::Matrix2d step_matrix(const Gains& gains, Coupling coupling,
                            double lambda, double dt);

struct NetworkState {
  double t = 0.0;
  Eigen::VectorXd x;
  Eigen::VectorXd v;
  bool is_sample = false;
};

struct Trajectory {
  std::vector<NetworkState> states;
  SamplingSchedule schedule;
  Gains gains;
  Coupling coupling = Coupling::full_pd;
};

/// Union of the grid {0, h, 2h, …} ∩ [0, horizon] and the sampling instants
/// in [0, horizon]; a grid point within 1e-12 of an instant is merged into it.
struct OutputTime {
  double t;
  bool is_sample;
};
std::vector<OutputTime> output_times(const SamplingSchedule& schedule,
                                     double grid_step, double horizon);

/// Direct propagation of the stacked network state through the Kronecker
/// structure (A⊗I)·X + (B⊗W_d)·X(t_k), exact on every interval.
Trajectory simulate(const Topology& topology, const Gains& gains,
                    Coupling coupling, const SamplingSchedule& schedule,
                    const Eigen::VectorXd& x0, const Eigen::VectorXd& v0,
                    double grid_step, double horizon);

/// Same trajectory computed through the eigenbasis of W_d: each mode is
/// advanced by step_matrix with its own eigenvalue and mapped back by T.
Trajectory simulate_modal(const Topology& topology, const Gains& gains,
                          Coupling coupling, const SamplingSchedule& schedule,
                          const Eigen::VectorXd& x0, const Eigen::VectorXd& v0,
                          double grid_step, double horizon);

/// ‖(x − x̄·1, v − v̄·1)‖₂ at every state.
std::vector<double> disagreement(const Trajectory& trajectory);

/// Single decoupled mode y = (z, ż) sampled on output_times().
struct ModeSample {
  double t;
  Eigen::Vector2d y;
  bool is_sample;
};
std::vector<ModeSample> simulate_mode(const Gains& gains, Coupling coupling,
                                      double lambda,
                                      const SamplingSchedule& schedule,
                                      const Eigen::Vector2d& y0,
                                      double grid_step, double horizon);

void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory);
void write_schedule_csv(std::ostream& out, const SamplingSchedule& schedule);
void write_disagreement_csv(std::ostream& out, const Trajectory& trajectory);

}  // namespace sdcons
