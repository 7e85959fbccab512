// SPDX-License-Identifier: Apache-2.0
// sdcons command-line front end. Talks to the library only through sdcons.h.
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "config.hpp"
#include "sdcons/sdcons.h"

namespace fs = std::filesystem;

namespace {

enum Exit { kOk = 0, kInvalid = 1, kNotFound = 2, kFailure = 3 };

struct ApiError : std::runtime_error {
  sdcons_status status;
  ApiError(sdcons_status s, const std::string& what) : std::runtime_error(what), status(s) {}
};

void check(sdcons_status s, const char* what) {
  if (s == SDCONS_OK) return;
  std::string msg = what;
  if (*sdcons_last_error()) msg += ": " + std::string(sdcons_last_error());
  throw ApiError(s, msg);
}

struct TopologyDeleter { void operator()(sdcons_topology* p) const { sdcons_topology_destroy(p); } };
struct ScheduleDeleter { void operator()(sdcons_schedule* p) const { sdcons_schedule_destroy(p); } };
struct TrajectoryDeleter { void operator()(sdcons_trajectory* p) const { sdcons_trajectory_destroy(p); } };
struct CertificateDeleter { void operator()(sdcons_certificate* p) const { sdcons_certificate_destroy(p); } };
using Topology = std::unique_ptr<sdcons_topology, TopologyDeleter>;
using Schedule = std::unique_ptr<sdcons_schedule, ScheduleDeleter>;
using Trajectory = std::unique_ptr<sdcons_trajectory, TrajectoryDeleter>;
using Certificate = std::unique_ptr<sdcons_certificate, CertificateDeleter>;

std::string num(double v) {
  if (std::isnan(v)) return "null";
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
  return std::string(buf, r.ptr);
}

struct Flags {
  std::string config;
  std::string out;
  std::optional<double> alpha;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> variant;
  long budget = 0;
  int restarts = 0;
  std::uint64_t solver_seed = 0;
  std::string psi12 = "lemma";
  std::string psi22 = "corrected";
  double tolerance = 1e-3;
  std::optional<double> t_max;
  int points = 101;
};

void add_common(CLI::App* app, Flags& f, bool config_required = true) {
  auto* c = app->add_option("--config", f.config, "experiment config (JSON)");
  if (config_required) c->required();
  app->add_option("--out", f.out, "output directory");
  app->add_option("--seed", f.seed, "override the config seed");
  app->add_option("--variant", f.variant, "override the coupling variant")
      ->check(CLI::IsMember({"full_pd", "position_only"}));
}

void add_solver(CLI::App* app, Flags& f) {
  sdcons_solver_options d;
  sdcons_solver_options_default(&d);
  f.budget = d.budget;
  f.restarts = d.restarts;
  f.solver_seed = d.seed;
  app->add_option("--alpha", f.alpha, "decay rate to certify");
  app->add_option("--solver-budget", f.budget, "total solver iterations per mode")
      ->check(CLI::PositiveNumber);
  app->add_option("--solver-restarts", f.restarts, "solver restarts per mode")
      ->check(CLI::PositiveNumber);
  app->add_option("--solver-seed", f.solver_seed, "solver seed");
  app->add_option("--psi12-variant", f.psi12, "cross-term form")
      ->check(CLI::IsMember({"lemma", "derivation"}));
  app->add_option("--psi22-variant", f.psi22, "lower-right block form")
      ->check(CLI::IsMember({"lemma", "corrected"}));
}

sdcons_solver_options solver_options(const Flags& f) {
  sdcons_solver_options o;
  sdcons_solver_options_default(&o);
  o.budget = f.budget;
  o.restarts = f.restarts;
  o.seed = f.solver_seed;
  o.psi12 = f.psi12 == "derivation" ? SDCONS_PSI12_DERIVATION : SDCONS_PSI12_LEMMA;
  o.psi22 = f.psi22 == "lemma" ? SDCONS_PSI22_LEMMA : SDCONS_PSI22_CORRECTED;
  return o;
}

cli::ExperimentConfig resolve_config(const Flags& f) {
  auto c = f.config.empty() ? cli::paper_config() : cli::load_config(f.config);
  if (f.seed) c.seed = *f.seed;
  if (f.variant) c.variant = cli::parse_variant(*f.variant);
  if (f.alpha) {
    if (!(*f.alpha > 0) || *f.alpha >= 1.0 / (2.0 * c.tau_bar))
      throw cli::ConfigError("--alpha", "must lie in (0, 1/(2 tau_bar))");
    c.alpha = *f.alpha;
  }
  return c;
}

Topology build_topology(const cli::ExperimentConfig& c) {
  sdcons_topology* t = nullptr;
  if (!c.graph_text.empty()) {
    check(sdcons_topology_parse(c.graph_text.c_str(), c.n, &t), "graph");
  } else {
    std::vector<int> flat;
    for (auto [a, b] : c.edges) {
      flat.push_back(a);
      flat.push_back(b);
    }
    check(sdcons_topology_create(c.n, flat.data(), c.edges.size(), &t), "graph");
  }
  Topology topology(t);
  int connected = 0;
  check(sdcons_topology_is_connected(t, &connected), "graph");
  if (!connected) throw ApiError(SDCONS_INVALID_ARGUMENT, "graph: topology is not connected");
  return topology;
}

sdcons_gains gains_of(const cli::ExperimentConfig& c) { return {c.k_p, c.k_d}; }

// writes to <out>/<name>, or stdout when no output directory was given
void emit(const Flags& f, const std::string& name, const std::string& text) {
  if (f.out.empty()) {
    std::cout << text;
    if (!text.empty() && text.back() != '\n') std::cout << '\n';
    return;
  }
  fs::create_directories(f.out);
  const auto path = fs::path(f.out) / name;
  std::ofstream o(path, std::ios::binary);
  o << text;
  if (!text.empty() && text.back() != '\n') o << '\n';
  if (!o) throw ApiError(SDCONS_IO_ERROR, "cannot write " + path.string());
}

std::string json_array(const std::vector<double>& v) {
  std::string s = "[";
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + num(v[i]);
  return s + "]";
}

std::string json_matrix(const std::vector<double>& m, int n) {
  std::string s = "[";
  for (int i = 0; i < n; ++i) {
    s += i ? ", [" : "[";
    for (int j = 0; j < n; ++j) s += (j ? ", " : "") + num(m[i * n + j]);
    s += "]";
  }
  return s + "]";
}

std::string certificate_json(const sdcons_certificate* cert) {
  char* text = nullptr;
  check(sdcons_certificate_to_json(cert, &text), "certificate");
  std::string s(text);
  sdcons_string_free(text);
  return s;
}

// ---- commands -----------------------------------------------------------

int run_spectrum(const Flags& f) {
  const auto c = resolve_config(f);
  auto topology = build_topology(c);
  const int n = sdcons_topology_size(topology.get());
  std::vector<double> eig(n), T(n * n), Tinv(n * n);
  check(sdcons_topology_spectrum(topology.get(), eig.data(), T.data(), Tinv.data()), "spectrum");
  std::string s = "{\n  \"n\": " + std::to_string(n) + ",\n";
  s += "  \"eigenvalues\": " + json_array(eig) + ",\n";
  s += "  \"modal_matrix\": " + json_matrix(T, n) + ",\n";
  s += "  \"modal_inverse\": " + json_matrix(Tinv, n) + "\n}\n";
  emit(f, "spectrum.json", s);
  return kOk;
}

struct SimulationRun {
  Schedule schedule;
  Trajectory trajectory;
  std::vector<double> x0, v0;
  double predicted = NAN;
};

SimulationRun simulate(const cli::ExperimentConfig& c, const sdcons_topology* topology,
                       sdcons_variant variant) {
  const int n = sdcons_topology_size(topology);
  SimulationRun run;
  cli::initial_state(c, n, run.x0, run.v0);
  sdcons_schedule* s = nullptr;
  check(sdcons_schedule_sample(c.seed, c.tau_min, c.tau_bar, c.horizon, &s), "schedule");
  run.schedule.reset(s);
  sdcons_trajectory* t = nullptr;
  check(sdcons_simulate(topology, gains_of(c), variant, s, run.x0.data(), run.v0.data(),
                        c.grid_step, c.horizon, 0, &t),
        "simulate");
  run.trajectory.reset(t);
  if (variant == SDCONS_FULL_PD) {
    // same seed, longer horizon: identical prefix, enough intervals to converge
    sdcons_schedule* longer = nullptr;
    check(sdcons_schedule_sample(c.seed, c.tau_min, c.tau_bar,
                                 std::max(c.horizon, 1e4 * c.tau_bar), &longer),
          "schedule");
    Schedule guard(longer);
    check(sdcons_network_consensus_value(topology, gains_of(c), longer, run.x0.data(),
                                         run.v0.data(), 1e-12, &run.predicted),
          "consensus value");
  }
  return run;
}

std::string samples_csv(const sdcons_trajectory* t, int n) {
  std::string s = "t";
  for (int i = 1; i <= n; ++i) s += ",x" + std::to_string(i);
  for (int i = 1; i <= n; ++i) s += ",v" + std::to_string(i);
  s += "\n";
  std::vector<double> x(n), v(n);
  for (std::size_t k = 0; k < sdcons_trajectory_length(t); ++k) {
    double time = 0;
    int is_sample = 0;
    check(sdcons_trajectory_state(t, k, &time, x.data(), v.data(), &is_sample), "trajectory");
    if (!is_sample) continue;
    s += num(time);
    for (double a : x) s += "," + num(a);
    for (double a : v) s += "," + num(a);
    s += "\n";
  }
  return s;
}

std::string run_summary(const SimulationRun& run, int n, const char* variant) {
  const auto* t = run.trajectory.get();
  const std::size_t len = sdcons_trajectory_length(t);
  std::vector<double> d(len), x(n), v(n);
  check(sdcons_trajectory_disagreement(t, d.data()), "disagreement");
  double time = 0;
  check(sdcons_trajectory_state(t, len - 1, &time, x.data(), v.data(), nullptr), "trajectory");
  double spread = 0, vmax = 0;
  for (int i = 0; i < n; ++i) {
    vmax = std::max(vmax, std::abs(v[i]));
    for (int j = 0; j < n; ++j) spread = std::max(spread, std::abs(x[i] - x[j]));
  }
  std::string s = "{\"variant\": \"" + std::string(variant) + "\"";
  s += ", \"final_time\": " + num(time);
  s += ", \"final_disagreement\": " + num(d.back());
  s += ", \"final_position_spread\": " + num(spread);
  s += ", \"final_max_speed\": " + num(vmax);
  s += ", \"final_positions\": " + json_array(x);
  s += ", \"predicted_consensus\": " + num(run.predicted);
  s += ", \"x0\": " + json_array(run.x0) + ", \"v0\": " + json_array(run.v0);
  return s + "}";
}

void write_with(const std::string& dir, const std::string& name,
                sdcons_status (*writer)(const sdcons_trajectory*, const char*),
                const sdcons_trajectory* t) {
  check(writer(t, (fs::path(dir) / name).c_str()), name.c_str());
}

int run_simulate(Flags f) {
  const auto c = resolve_config(f);
  auto topology = build_topology(c);
  if (f.out.empty()) f.out = ".";
  fs::create_directories(f.out);
  auto run = simulate(c, topology.get(), c.variant);
  write_with(f.out, "trajectory.csv", sdcons_trajectory_write_csv, run.trajectory.get());
  write_with(f.out, "disagreement.csv", sdcons_trajectory_write_disagreement_csv,
             run.trajectory.get());
  check(sdcons_schedule_write_csv(run.schedule.get(), (fs::path(f.out) / "schedule.csv").c_str()),
        "schedule.csv");
  const auto summary =
      run_summary(run, sdcons_topology_size(topology.get()), cli::variant_name(c.variant));
  emit(f, "summary.json", summary);
  std::cout << summary << "\n";
  return kOk;
}

struct CertifyOutcome {
  Certificate certificate;
  bool feasible = false;
};

CertifyOutcome certify(const cli::ExperimentConfig& c, const sdcons_topology* topology,
                       sdcons_variant variant, double alpha, const sdcons_solver_options& o) {
  sdcons_certificate* cert = nullptr;
  const auto s = sdcons_certify(topology, gains_of(c), variant, c.tau_bar, alpha, &o, &cert);
  if (s != SDCONS_NOT_FOUND) check(s, "certify");
  CertifyOutcome out{Certificate(cert), s == SDCONS_OK};
  if (out.feasible) {
    int ok = 0;
    check(sdcons_certificate_reverify(cert, &ok), "reverify");
    if (!ok) throw ApiError(SDCONS_NUMERICAL_FAILURE, "certificate failed re-verification");
  }
  return out;
}

int run_certify(const Flags& f) {
  const auto c = resolve_config(f);
  if (!c.alpha) throw cli::ConfigError("alpha", "missing (set it in the config or pass --alpha)");
  auto topology = build_topology(c);
  auto result = certify(c, topology.get(), c.variant, *c.alpha, solver_options(f));
  emit(f, "certificate.json", certificate_json(result.certificate.get()));
  if (!result.feasible) {
    std::cerr << "not_found: no certificate at alpha = " << num(*c.alpha) << " (failing lambda "
              << num(sdcons_certificate_failing_lambda(result.certificate.get())) << ")\n";
    return kNotFound;
  }
  return kOk;
}

struct MaxAlphaOutcome {
  double alpha = NAN;
  Certificate certificate;
};

MaxAlphaOutcome max_alpha(const cli::ExperimentConfig& c, const sdcons_topology* topology,
                          sdcons_variant variant, double tolerance,
                          const sdcons_solver_options& o) {
  MaxAlphaOutcome out;
  sdcons_certificate* cert = nullptr;
  const auto s =
      sdcons_max_alpha(topology, gains_of(c), variant, c.tau_bar, tolerance, &o, &out.alpha, &cert);
  if (s == SDCONS_NOT_FOUND) return out;
  check(s, "max-alpha");
  out.certificate.reset(cert);
  int ok = 0;
  check(sdcons_certificate_reverify(cert, &ok), "reverify");
  if (!ok) throw ApiError(SDCONS_NUMERICAL_FAILURE, "certificate failed re-verification");
  return out;
}

int run_max_alpha(const Flags& f) {
  const auto c = resolve_config(f);
  auto topology = build_topology(c);
  auto result = max_alpha(c, topology.get(), c.variant, f.tolerance, solver_options(f));
  if (!result.certificate) {
    std::cerr << "not_found: no certificate at the lower bracket alpha = 1e-3\n";
    return kNotFound;
  }
  if (f.out.empty()) {
    std::cout << num(result.alpha) << "\n" << certificate_json(result.certificate.get());
  } else {
    emit(f, "max_alpha_certificate.json", certificate_json(result.certificate.get()));
    std::cout << num(result.alpha) << "\n";
  }
  return kOk;
}

int run_beta_table(const Flags& f) {
  const auto c = resolve_config(f);
  const double t_max = f.t_max.value_or(10.0 * c.tau_bar);
  if (!(t_max > 0)) throw cli::ConfigError("--t-max", "must be positive");
  if (f.points < 2) throw cli::ConfigError("--points", "needs at least 2 points");
  std::string s = "T,beta,mu\n";
  for (int i = 0; i < f.points; ++i) {
    const double T = t_max * i / (f.points - 1);
    double b = 0, m = 0;
    check(sdcons_beta(gains_of(c), T, &b), "beta");
    check(sdcons_mu(gains_of(c), T, &m), "mu");
    s += num(T) + "," + num(b) + "," + num(m) + "\n";
  }
  emit(f, "beta_table.csv", s);
  return kOk;
}

int run_reproduce(Flags f) {
  auto c = resolve_config(f);
  if (f.out.empty()) f.out = "paper_output";
  fs::create_directories(f.out);
  auto topology = build_topology(c);
  const int n = sdcons_topology_size(topology.get());
  const auto o = solver_options(f);
  const double alpha = c.alpha.value_or(0.38);
  std::string summary = "{\n";

  // Fig. 1 / Fig. 2: full PD positions, velocities and the transmitted samples.
  auto full = simulate(c, topology.get(), SDCONS_FULL_PD);
  write_with(f.out, "fig1_full_pd_trajectory.csv", sdcons_trajectory_write_csv,
             full.trajectory.get());
  write_with(f.out, "full_pd_disagreement.csv", sdcons_trajectory_write_disagreement_csv,
             full.trajectory.get());
  emit(f, "fig2_full_pd_samples.csv", samples_csv(full.trajectory.get(), n));
  check(sdcons_schedule_write_csv(full.schedule.get(), (fs::path(f.out) / "schedule.csv").c_str()),
        "schedule.csv");
  summary += "  \"full_pd_simulation\": " + run_summary(full, n, "full_pd") + ",\n";

  // Fig. 3: position-only coupling, same schedule and initial state.
  auto pos = simulate(c, topology.get(), SDCONS_POSITION_ONLY);
  write_with(f.out, "fig3_position_only_trajectory.csv", sdcons_trajectory_write_csv,
             pos.trajectory.get());
  write_with(f.out, "position_only_disagreement.csv", sdcons_trajectory_write_disagreement_csv,
             pos.trajectory.get());
  summary += "  \"position_only_simulation\": " + run_summary(pos, n, "position_only") + ",\n";

  std::cerr << "certifying full_pd at alpha = " << num(alpha) << "\n";
  auto fixed = certify(c, topology.get(), SDCONS_FULL_PD, alpha, o);
  emit(f, "certificate_full_pd_fixed_alpha.json", certificate_json(fixed.certificate.get()));
  summary += "  \"full_pd_fixed_alpha\": {\"alpha\": " + num(alpha) + ", \"status\": \"" +
             (fixed.feasible ? "feasible" : "not_found") + "\", \"failing_lambda\": " +
             num(sdcons_certificate_failing_lambda(fixed.certificate.get())) + "},\n";

  const sdcons_variant variants[] = {SDCONS_FULL_PD, SDCONS_POSITION_ONLY};
  for (std::size_t i = 0; i < 2; ++i) {
    const std::string name = cli::variant_name(variants[i]);
    std::cerr << "max-alpha " << name << "\n";
    auto r = max_alpha(c, topology.get(), variants[i], f.tolerance, o);
    if (r.certificate)
      emit(f, "certificate_" + name + "_max_alpha.json", certificate_json(r.certificate.get()));
    summary += "  \"" + name + "_max_alpha\": " + num(r.alpha) + (i == 0 ? ",\n" : "\n");
  }
  summary += "}\n";
  emit(f, "summary.json", summary);
  std::cout << summary;
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sampled-data second-order consensus: simulation and LMI certification"};
  app.require_subcommand(1);
  Flags f;

  auto* spectrum = app.add_subcommand("spectrum", "eigenvalues and modal transform as JSON");
  add_common(spectrum, f);
  auto* sim = app.add_subcommand("simulate", "trajectory, schedule and disagreement CSVs");
  add_common(sim, f);
  auto* cert = app.add_subcommand("certify", "certificate JSON at a fixed alpha");
  add_common(cert, f);
  add_solver(cert, f);
  auto* maxa = app.add_subcommand("max-alpha", "largest certifiable alpha by bisection");
  add_common(maxa, f);
  add_solver(maxa, f);
  maxa->add_option("--tolerance", f.tolerance, "bisection tolerance")->check(CLI::PositiveNumber);
  auto* beta = app.add_subcommand("beta-table", "CSV of beta(T) and mu(T)");
  add_common(beta, f);
  beta->add_option("--t-max", f.t_max, "largest T (default 10 tau_bar)");
  beta->add_option("--points", f.points, "number of rows");
  auto* repro = app.add_subcommand("reproduce-paper", "six-agent experiment data and certificates");
  add_common(repro, f, false);
  add_solver(repro, f);
  repro->add_option("--tolerance", f.tolerance, "bisection tolerance")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kInvalid;
  }

  try {
    if (spectrum->parsed()) return run_spectrum(f);
    if (sim->parsed()) return run_simulate(f);
    if (cert->parsed()) return run_certify(f);
    if (maxa->parsed()) return run_max_alpha(f);
    if (beta->parsed()) return run_beta_table(f);
    if (repro->parsed()) return run_reproduce(f);
  } catch (const cli::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kInvalid;
  } catch (const ApiError& e) {
    std::cerr << "error: " << e.what() << "\n";
    if (e.status == SDCONS_INVALID_ARGUMENT) return kInvalid;
    if (e.status == SDCONS_NOT_FOUND) return kNotFound;
    return kFailure;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kInvalid;
}
