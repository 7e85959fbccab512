// SPDX-License-Identifier: Apache-2.0
#include "sdcons/lmi.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sdcons/error.hpp"
#include "sdcons/io.hpp"
#include "sdcons/linalg.hpp"

namespace sdcons::lmi {
namespace {

using Mat2 = Eigen::Matrix2d;

// X + Xᵀ and (X + Xᵀ)/2 are exactly symmetric in floating point.
Mat2 twice_sym(const Mat2& x) { return x + x.transpose(); }
Mat2 sym(const Mat2& x) { return 0.5 * (x + x.transpose()); }

Mat2 symmetric_from(double a, double b, double c) {
  Mat2 m;
  m << a, b, b, c;
  return m;
}

void check_alpha(double tau_bar, double alpha) {
  if (!(tau_bar > 0)) throw InvalidArgument("lmi: tau_bar must be positive");
  if (!(alpha < 1.0 / (2.0 * tau_bar)))
    throw InvalidArgument("lmi: alpha = " + io::format_number(alpha) +
                          " violates alpha < 1/(2 tau_bar) = " +
                          io::format_number(1.0 / (2.0 * tau_bar)));
}

}  // namespace

Variables Variables::from_vector(std::span<const double> t) {
  if (t.size() != kCount)
    throw InvalidArgument("lmi: expected 17 variables, got " + std::to_string(t.size()));
  Variables v;
  v.P = symmetric_from(t[0], t[1], t[2]);
  v.S = symmetric_from(t[3], t[4], t[5]);
  v.R = symmetric_from(t[6], t[7], t[8]);
  v.Q1 << t[9], t[10], t[11], t[12];
  v.Q2 << t[13], t[14], t[15], t[16];
  return v;
}

std::vector<double> Variables::to_vector() const {
  return {P(0, 0),  P(0, 1),  P(1, 1),  S(0, 0),  S(0, 1),  S(1, 1),
          R(0, 0),  R(0, 1),  R(1, 1),  Q1(0, 0), Q1(0, 1), Q1(1, 0),
          Q1(1, 1), Q2(0, 0), Q2(0, 1), Q2(1, 0), Q2(1, 1)};
}

PsiBlocks psi_blocks(const ModeSetup& m, double tau, const Variables& v) {
  if (!(tau >= 0)) throw InvalidArgument("psi_blocks: tau_eff must be non-negative");
  const Mat2 a = system_matrix(m.gains);
  const Mat2 b = input_matrix(m.gains, m.coupling);
  const double l = m.lambda, al = m.alpha;
  const Mat2& P = v.P;
  const Mat2& S = v.S;
  const Mat2& R = v.R;

  PsiBlocks out;
  out.psi11 = twice_sym(P * a) - S - twice_sym(v.Q1) +
              tau * (twice_sym(S * a) + sym(a.transpose() * R * a) + 2 * al * S) +
              2 * al * P - 2 * al * R;

  const Mat2 cross = m.forms.psi12 == Psi12Form::lemma
                         ? Mat2(-a.transpose() * S + l * S * b + l * a.transpose() * R * b -
                                2 * al * S)
                         : Mat2(S * a + a.transpose() * S + a.transpose() * R * a - 2 * al * S);
  out.psi12 = l * P * b + S + 2 * al * R + v.Q1 - v.Q2.transpose() + tau * cross;

  const double s_sign = m.forms.psi22 == Psi22Form::lemma ? 1.0 : -1.0;
  out.psi22 = -S - 2 * al * R + twice_sym(v.Q2) -
              tau * (l * twice_sym(S * b) - l * l * sym(b.transpose() * R * b) +
                     s_sign * 2 * al * S);
  return out;
}

LmiPair lmi_matrices(const ModeSetup& m, const Variables& v) {
  check_alpha(m.tau_bar, m.alpha);
  const double tau = m.tau_bar;
  LmiPair out;
  const PsiBlocks full = psi_blocks(m, tau, v);
  out.first.topLeftCorner<2, 2>() = full.psi11;
  out.first.topRightCorner<2, 2>() = full.psi12;
  out.first.bottomLeftCorner<2, 2>() = full.psi12.transpose();
  out.first.bottomRightCorner<2, 2>() = full.psi22;

  const PsiBlocks zero = psi_blocks(m, 0.0, v);
  auto& s = out.second;
  s.setZero();
  s.block<2, 2>(0, 0) = zero.psi11;
  s.block<2, 2>(0, 2) = zero.psi12;
  s.block<2, 2>(2, 0) = zero.psi12.transpose();
  s.block<2, 2>(2, 2) = zero.psi22;
  s.block<2, 2>(0, 4) = tau * v.Q1;
  s.block<2, 2>(4, 0) = (tau * v.Q1).transpose();
  s.block<2, 2>(2, 4) = tau * v.Q2;
  s.block<2, 2>(4, 2) = (tau * v.Q2).transpose();
  s.block<2, 2>(4, 4) = -tau * (1 - 2 * m.alpha * tau) * v.R;
  return out;
}

Eigen::Matrix4d bordered_schur_complement(const ModeSetup& m, const Variables& v) {
  check_alpha(m.tau_bar, m.alpha);
  const PsiBlocks zero = psi_blocks(m, 0.0, v);
  Eigen::Matrix4d base;
  base << zero.psi11, zero.psi12, zero.psi12.transpose(), zero.psi22;
  Eigen::Matrix<double, 4, 2> q;
  q << v.Q1, v.Q2;
  const double scale = m.tau_bar / (1 - 2 * m.alpha * m.tau_bar);
  const Eigen::Matrix4d correction = scale * q * v.R.inverse() * q.transpose();
  return base + 0.5 * (correction + correction.transpose());
}

std::vector<sdp::AffineMatrixConstraint> mode_constraints(const ModeSetup& m) {
  check_alpha(m.tau_bar, m.alpha);
  std::vector<sdp::AffineMatrixConstraint> out(5);
  const int dims[5] = {2, 2, 2, 4, 6};
  for (int c = 0; c < 5; ++c) out[c].constant = Eigen::MatrixXd::Zero(dims[c], dims[c]);
  for (int j = 0; j < Variables::kCount; ++j) {
    std::vector<double> unit(Variables::kCount, 0.0);
    unit[static_cast<std::size_t>(j)] = 1.0;
    const Variables v = Variables::from_vector(unit);
    const LmiPair pair = lmi_matrices(m, v);
    out[0].coefficients.push_back(-v.P);
    out[1].coefficients.push_back(-v.S);
    out[2].coefficients.push_back(-v.R);
    out[3].coefficients.push_back(pair.first);
    out[4].coefficients.push_back(pair.second);
  }
  return out;
}

std::array<double, 5> constraint_margins(const ModeSetup& m, const Variables& v) {
  const LmiPair pair = lmi_matrices(m, v);
  return {max_eigenvalue(-v.P), max_eigenvalue(-v.S), max_eigenvalue(-v.R),
          max_eigenvalue(pair.first), max_eigenvalue(pair.second)};
}

namespace {

void check_mode_preconditions(double lambda, double tau_bar, double alpha) {
  if (!(lambda >= -1.0 && lambda < 1.0))
    throw InvalidArgument("certify_mode: lambda = " + io::format_number(lambda) +
                          " outside [-1, 1)");
  if (!(alpha > 0)) throw InvalidArgument("certify_mode: alpha must be positive");
  check_alpha(tau_bar, alpha);
}

std::vector<double> default_start() {
  Variables v;
  v.P = 0.5 * Mat2::Identity();
  v.S = 0.5 * Mat2::Identity();
  v.R = 0.5 * Mat2::Identity();
  return v.to_vector();
}

}  // namespace

std::variant<ModeCertificate, ModeNotFound> certify_mode(const Gains& gains,
                                                         Coupling coupling, double lambda,
                                                         double tau_bar, double alpha,
                                                         const CertifyOptions& options) {
  check_mode_preconditions(lambda, tau_bar, alpha);
  const ModeSetup setup{gains, coupling, lambda, tau_bar, alpha, options.forms};
  const auto constraints = mode_constraints(setup);
  sdp::Options solver = options.solver;
  if (!solver.initial) solver.initial = default_start();
  const sdp::FeasibilityResult result =
      sdp::feasibility(constraints, kTraceIndices, solver);

  if (result.status == sdp::Status::feasible) {
    ModeCertificate cert;
    cert.lambda = lambda;
    cert.alpha = alpha;
    cert.variables = Variables::from_vector(result.point);
    cert.margins = constraint_margins(setup, cert.variables);
    cert.solver_iterations = result.iterations;
    return cert;
  }
  return ModeNotFound{lambda, alpha, result.worst_margin, result.iterations};
}

std::vector<std::pair<double, int>> distinct_modes(const Spectrum& spectrum) {
  std::vector<std::pair<double, int>> out;
  for (Eigen::Index i = 1; i < spectrum.eigenvalues.size(); ++i) {
    const double l = spectrum.eigenvalues(i);
    if (!out.empty() && std::abs(out.back().first - l) <= kEigenvalueMergeTolerance)
      ++out.back().second;
    else
      out.emplace_back(l, 1);
  }
  return out;
}

std::variant<ConsensusCertificate, NetworkNotFound> certify_network(
    const Topology& topology, const Gains& gains, Coupling coupling, double tau_bar,
    double alpha, const CertifyOptions& options,
    std::span<const std::optional<std::vector<double>>> warm_starts) {
  if (!is_connected(topology))
    throw InvalidArgument("certify_network: graph is not connected");
  if (!(alpha > 0)) throw InvalidArgument("certify_network: alpha must be positive");
  check_alpha(tau_bar, alpha);
  const auto modes = distinct_modes(spectrum(topology));

  ConsensusCertificate cert{topology.digest(), gains, coupling, tau_bar, alpha, options.forms, {}};
  for (std::size_t i = 0; i < modes.size(); ++i) {
    CertifyOptions mode_options = options;
    mode_options.solver.seed = options.solver.seed + 1000 * static_cast<std::uint64_t>(i);
    if (i < warm_starts.size() && warm_starts[i]) mode_options.solver.initial = warm_starts[i];
    // Clamp so a numerically-unit eigenvalue just below 1 stays admissible.
    const double lambda = std::clamp(modes[i].first, -1.0, 1.0 - 1e-15);
    auto outcome = certify_mode(gains, coupling, lambda, tau_bar, alpha, mode_options);
    if (auto* miss = std::get_if<ModeNotFound>(&outcome))
      return NetworkNotFound{*miss, std::move(cert.modes)};
    auto& mode = std::get<ModeCertificate>(outcome);
    mode.multiplicity = modes[i].second;
    cert.modes.push_back(std::move(mode));
  }
  return cert;
}

std::optional<MaxAlphaResult> max_alpha(const Topology& topology, const Gains& gains,
                                        Coupling coupling, double tau_bar, double tolerance,
                                        const CertifyOptions& options) {
  if (!(tolerance > 0)) throw InvalidArgument("max_alpha: tolerance must be positive");
  if (!(tau_bar > 0)) throw InvalidArgument("max_alpha: tau_bar must be positive");

  auto first = certify_network(topology, gains, coupling, tau_bar, kAlphaLowerBracket, options);
  auto* base = std::get_if<ConsensusCertificate>(&first);
  if (!base) return std::nullopt;

  MaxAlphaResult best{kAlphaLowerBracket, std::move(*base), 0};
  double lo = kAlphaLowerBracket;
  double hi = 1.0 / (2.0 * tau_bar);
  while (hi - lo > tolerance) {
    const double mid = 0.5 * (lo + hi);
    std::vector<std::optional<std::vector<double>>> warm;
    for (const auto& mode : best.certificate.modes) warm.emplace_back(mode.variables.to_vector());
    auto outcome = certify_network(topology, gains, coupling, tau_bar, mid, options, warm);
    ++best.bisection_steps;
    if (auto* cert = std::get_if<ConsensusCertificate>(&outcome)) {
      lo = mid;
      best.alpha = mid;
      best.certificate = std::move(*cert);
    } else {
      hi = mid;
    }
  }
  return best;
}

std::vector<ModeSample> dense_interval(const Gains& gains, Coupling coupling, double lambda,
                                       const Eigen::Vector2d& y_k, double interval,
                                       int points) {
  if (points < 2) throw InvalidArgument("dense_interval: need at least 2 points");
  if (!(interval > 0)) throw InvalidArgument("dense_interval: interval must be positive");
  std::vector<ModeSample> out;
  out.reserve(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) {
    const double s = interval * i / (points - 1);
    out.push_back({s, step_matrix(gains, coupling, lambda, s) * y_k, i == 0});
  }
  return out;
}

LkReport lk_check(const ModeSetup& m, const Variables& v, std::span<const ModeSample> samples,
                  double relative_tolerance) {
  if (samples.empty()) throw InvalidArgument("lk_check: empty interval");
  const double t_k = samples.front().t;
  if (samples.back().t - t_k > m.tau_bar * (1 + 1e-12))
    throw InvalidArgument("lk_check: interval longer than tau_bar");
  const Mat2 a = system_matrix(m.gains);
  const Mat2 b = input_matrix(m.gains, m.coupling);
  const Eigen::Vector2d y_k = samples.front().y;
  const Eigen::Vector2d forcing = m.lambda * b * y_k;

  LkReport report;
  const double v_k = y_k.dot(v.P * y_k);
  const double tol = relative_tolerance * v_k;
  double integral = 0.0;
  double prev_rate = 0.0;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const Eigen::Vector2d& y = samples[i].y;
    const Eigen::Vector2d ydot = a * y + forcing;
    const double rate = ydot.dot(v.R * ydot);
    if (i > 0) integral += 0.5 * (rate + prev_rate) * (samples[i].t - samples[i - 1].t);
    prev_rate = rate;

    const double tau = samples[i].t - t_k;
    const Eigen::Vector2d xi = y - y_k;
    const double value = y.dot(v.P * y) + (m.tau_bar - tau) * xi.dot(v.S * xi) +
                         (m.tau_bar - tau) * integral;
    report.values.push_back(value);
    const double excess = value - v_k * std::exp(-2 * m.alpha * tau) - tol;
    if (i == 0 || excess > report.worst_excess) {
      report.worst_excess = excess;
      report.worst_time = samples[i].t;
    }
  }
  report.ok = report.worst_excess <= 0.0;
  const Eigen::Vector2d& y_end = samples.back().y;
  report.jump_nonincreasing =
      y_end.dot(v.P * y_end) <= report.values.back() + 1e-12 * std::abs(report.values.back());
  return report;
}

const char* to_string(Coupling c) {
  return c == Coupling::full_pd ? "full_pd" : "position_only";
}
const char* to_string(Psi12Form f) { return f == Psi12Form::lemma ? "lemma" : "derivation"; }
const char* to_string(Psi22Form f) { return f == Psi22Form::lemma ? "lemma" : "corrected"; }

namespace {

std::string header_json(const std::string& status, const std::string& digest, const Gains& g,
                        Coupling coupling, double tau_bar, double alpha,
                        const FormOptions& forms) {
  using io::format_number;
  return "  \"status\": " + io::json_string(status) + ",\n" +
         "  \"topology_digest\": " + io::json_string(digest) + ",\n" +
         "  \"k_p\": " + format_number(g.k_p) + ",\n" +
         "  \"k_d\": " + format_number(g.k_d) + ",\n" +
         "  \"variant\": " + io::json_string(to_string(coupling)) + ",\n" +
         "  \"tau_bar\": " + format_number(tau_bar) + ",\n" +
         "  \"alpha\": " + format_number(alpha) + ",\n" +
         "  \"psi12_variant\": " + io::json_string(to_string(forms.psi12)) + ",\n" +
         "  \"psi22_variant\": " + io::json_string(to_string(forms.psi22)) + ",\n";
}

std::string mode_json(const ModeCertificate& m) {
  using io::format_number;
  using io::json_matrix;
  std::string s = "    {\n";
  s += "      \"lambda\": " + format_number(m.lambda) + ",\n";
  s += "      \"multiplicity\": " + std::to_string(m.multiplicity) + ",\n";
  s += "      \"alpha\": " + format_number(m.alpha) + ",\n";
  s += "      \"P\": " + json_matrix(m.variables.P) + ",\n";
  s += "      \"S\": " + json_matrix(m.variables.S) + ",\n";
  s += "      \"R\": " + json_matrix(m.variables.R) + ",\n";
  s += "      \"Q1\": " + json_matrix(m.variables.Q1) + ",\n";
  s += "      \"Q2\": " + json_matrix(m.variables.Q2) + ",\n";
  s += "      \"margins\": {\"neg_P\": " + format_number(m.margins[0]) +
       ", \"neg_S\": " + format_number(m.margins[1]) +
       ", \"neg_R\": " + format_number(m.margins[2]) +
       ", \"lmi1\": " + format_number(m.margins[3]) +
       ", \"lmi2\": " + format_number(m.margins[4]) + "},\n";
  s += "      \"solver_iterations\": " + std::to_string(m.solver_iterations) + "\n";
  return s + "    }";
}

std::string modes_json(const std::vector<ModeCertificate>& modes) {
  if (modes.empty()) return "[]";
  std::string s = "[\n";
  for (std::size_t i = 0; i < modes.size(); ++i) {
    s += mode_json(modes[i]);
    s += i + 1 < modes.size() ? ",\n" : "\n";
  }
  return s + "  ]";
}

}  // namespace

std::string to_json(const ConsensusCertificate& c) {
  return "{\n" +
         header_json("feasible", c.topology_digest, c.gains, c.coupling, c.tau_bar, c.alpha,
                     c.forms) +
         "  \"modes\": " + modes_json(c.modes) + "\n}\n";
}

std::string to_json(const NetworkNotFound& f, const Topology& topology, const Gains& gains,
                    Coupling coupling, double tau_bar, const FormOptions& forms) {
  using io::format_number;
  return "{\n" +
         header_json("not_found", topology.digest(), gains, coupling, tau_bar, f.failing.alpha,
                     forms) +
         "  \"failing_lambda\": " + format_number(f.failing.lambda) + ",\n" +
         "  \"best_margin\": " + format_number(f.failing.best_margin) + ",\n" +
         "  \"solver_iterations\": " + std::to_string(f.failing.solver_iterations) + ",\n" +
         "  \"modes\": " + modes_json(f.certified) + "\n}\n";
}

bool reverify(const ConsensusCertificate& c, double margin) {
  for (const auto& mode : c.modes) {
    const ModeSetup setup{c.gains, c.coupling, mode.lambda, c.tau_bar, c.alpha, c.forms};
    for (double value : constraint_margins(setup, mode.variables))
      if (!(value <= -margin)) return false;
  }
  return !c.modes.empty();
}

}  // namespace sdcons::lmi
