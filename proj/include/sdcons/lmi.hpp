// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <Eigen/Dense>
#include <array>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "sdcons/dynamics.hpp"
#include "sdcons/graph.hpp"
#include "sdcons/sdp.hpp"

namespace sdcons::lmi {

/// Cross term multiplied by τ in Ψ12.
///  lemma:      −AᵀS + λSB + λAᵀRB − 2αS
///  derivation: SA + AᵀS + AᵀRA − 2αS
enum class Psi12Form { lemma, derivation };

/// Sign of the 2αS term inside the τ-multiplied bracket of Ψ22.
///  lemma:     −τ(λBᵀS + λSB − λ²BᵀRB + 2αS)
///  corrected: −τ(λBᵀS + λSB − λ²BᵀRB − 2αS), which is what differentiating
///             V + 2αV actually produces for the (y_k, y_k) block.
enum class Psi22Form { lemma, corrected };

struct FormOptions {
  Psi12Form psi12 = Psi12Form::lemma;
  Psi22Form psi22 = Psi22Form::corrected;
};

/// Decision variables: P, S, R symmetric, Q = [Q1; Q2] ∈ ℝ^{4×2}.
/// Flattened as (P00, P01, P11, S00, S01, S11, R00, R01, R11, Q1 row-major,
/// Q2 row-major): 17 scalars.
struct Variables {
  Eigen::Matrix2d P = Eigen::Matrix2d::Zero();
  Eigen::Matrix2d S = Eigen::Matrix2d::Zero();
  Eigen::Matrix2d R = Eigen::Matrix2d::Zero();
  Eigen::Matrix2d Q1 = Eigen::Matrix2d::Zero();
  Eigen::Matrix2d Q2 = Eigen::Matrix2d::Zero();

  static constexpr int kCount = 17;
  static Variables from_vector(std::span<const double> theta);
  std::vector<double> to_vector() const;
};

/// Indices of P00 and P11, the trace(P) = 1 normalization.
inline constexpr std::array<int, 2> kTraceIndices{0, 2};

/// Parameters shared by every block of one mode's LMIs.
struct ModeSetup {
  Gains gains;
  Coupling coupling = Coupling::full_pd;
  double lambda = 0.0;
  double tau_bar = 1.0;
  double alpha = 0.0;
  FormOptions forms{};
};

struct PsiBlocks {
  Eigen::Matrix2d psi11, psi12, psi22;
};

/// Ψ-blocks evaluated at an effective delay bound `tau_eff`.
PsiBlocks psi_blocks(const ModeSetup& setup, double tau_eff, const Variables& vars);

struct LmiPair {
  Eigen::Matrix4d first;                 ///< [[Ψ11(τ̄), Ψ12(τ̄)], [·ᵀ, Ψ22(τ̄)]]
  Eigen::Matrix<double, 6, 6> second;    ///< bordered form at τ = 0
};

/// Both LMI matrices, exactly symmetric. Rejects alpha ≥ 1/(2τ̄).
LmiPair lmi_matrices(const ModeSetup& setup, const Variables& vars);

/// [[Ψ11(0), Ψ12(0)], [·ᵀ, Ψ22(0)]] + τ̄/(1 − 2ατ̄)·Q R⁻¹ Qᵀ.
Eigen::Matrix4d bordered_schur_complement(const ModeSetup& setup, const Variables& vars);

/// The five constraints −P, −S, −R, LMI1, LMI2 as linear matrix functions
/// of the 17 scalars.
std::vector<sdp::AffineMatrixConstraint> mode_constraints(const ModeSetup& setup);

/// λ_max of (−P, −S, −R, LMI1, LMI2), recomputed from the variables alone.
std::array<double, 5> constraint_margins(const ModeSetup& setup, const Variables& vars);

struct ModeCertificate {
  double lambda = 0.0;
  double alpha = 0.0;
  int multiplicity = 1;
  Variables variables;
  std::array<double, 5> margins{};
  long solver_iterations = 0;
};

struct ModeNotFound {
  double lambda = 0.0;
  double alpha = 0.0;
  double best_margin = 0.0;
  long solver_iterations = 0;
};

struct CertifyOptions {
  sdp::Options solver{};
  FormOptions forms{};
};

/// Searches for P, S, R ≻ 0 and Q satisfying both LMIs for one mode.
/// Preconditions λ ∈ [−1, 1), 0 < α < 1/(2τ̄) throw InvalidArgument.
std::variant<ModeCertificate, ModeNotFound> certify_mode(
    const Gains& gains, Coupling coupling, double lambda, double tau_bar, double alpha,
    const CertifyOptions& options = {});

struct ConsensusCertificate {
  std::string topology_digest;
  Gains gains;
  Coupling coupling = Coupling::full_pd;
  double tau_bar = 0.0;
  double alpha = 0.0;
  FormOptions forms{};
  /// One entry per distinct non-unitary eigenvalue, descending.
  std::vector<ModeCertificate> modes;
};

struct NetworkNotFound {
  ModeNotFound failing;
  std::vector<ModeCertificate> certified;  ///< modes that passed before it
};

inline constexpr double kEigenvalueMergeTolerance = 1e-9;

/// Distinct values among λ₂..λₙ (merged within 1e-9) with multiplicities.
std::vector<std::pair<double, int>> distinct_modes(const Spectrum& spectrum);

/// Certifies every non-unitary mode at a common α. Modes are attempted in
/// descending λ order and the first failure is reported.
std::variant<ConsensusCertificate, NetworkNotFound> certify_network(
    const Topology& topology, const Gains& gains, Coupling coupling, double tau_bar,
    double alpha, const CertifyOptions& options = {},
    std::span<const std::optional<std::vector<double>>> warm_starts = {});

inline constexpr double kAlphaLowerBracket = 1e-3;

struct MaxAlphaResult {
  double alpha = 0.0;
  ConsensusCertificate certificate;
  int bisection_steps = 0;
};

/// Bisection on α over (1e-3, 1/(2τ̄)) with certify_network as the oracle.
/// Each probe warm-starts from the last certified variables. Returns nullopt
/// when the lower bracket itself cannot be certified.
std::optional<MaxAlphaResult> max_alpha(const Topology& topology, const Gains& gains,
                                        Coupling coupling, double tau_bar,
                                        double tolerance = 1e-3,
                                        const CertifyOptions& options = {});

/// Exact mode samples y(t_k + s) for s on a uniform grid of `points` over
/// [0, interval].
std::vector<ModeSample> dense_interval(const Gains& gains, Coupling coupling, double lambda,
                                       const Eigen::Vector2d& y_k, double interval,
                                       int points);

struct LkReport {
  bool ok = true;
  double worst_time = 0.0;
  double worst_excess = 0.0;  ///< max of V(t) − V(t_k)e^{−2α(t−t_k)} − tol
  bool jump_nonincreasing = true;
  std::vector<double> values;  ///< V at each sample
};

/// Evaluates V(t) = yᵀPy + (τ̄−τ)ξᵀSξ + (τ̄−τ)∫ẏᵀRẏ (trapezoid) along one
/// interval whose first sample is t_k, and checks
/// V(t) ≤ V(t_k)e^{−2α(t−t_k)} + relative_tolerance·V(t_k).
/// Also checks that resetting at the last sample cannot increase V.
LkReport lk_check(const ModeSetup& setup, const Variables& vars,
                  std::span<const ModeSample> interval, double relative_tolerance = 1e-6);

/// Structured text export, matrices row-major with 17 significant digits.
std::string to_json(const ConsensusCertificate& certificate);
std::string to_json(const NetworkNotFound& failure, const Topology& topology,
                    const Gains& gains, Coupling coupling, double tau_bar,
                    const FormOptions& forms);

/// Recomputes every mode's margins from its variables; true when all are
/// ≤ −margin.
bool reverify(const ConsensusCertificate& certificate, double margin = sdp::kDefaultMargin);

const char* to_string(Coupling coupling);
const char* to_string(Psi12Form form);
const char* to_string(Psi22Form form);

}  // namespace sdcons::lmi
