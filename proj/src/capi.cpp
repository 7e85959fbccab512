// SPDX-License-Identifier: Apache-2.0
#include "sdcons/sdcons.h"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <limits>
#include <new>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "sdcons/dynamics.hpp"
#include "sdcons/error.hpp"
#include "sdcons/graph.hpp"
#include "sdcons/lmi.hpp"
#include "sdcons/uem.hpp"

struct sdcons_topology {
  sdcons::Topology value;
};

struct sdcons_schedule {
  sdcons::SamplingSchedule value;
};

struct sdcons_trajectory {
  sdcons::Trajectory value;
};

struct sdcons_certificate {
  sdcons::Topology topology;
  sdcons::lmi::FormOptions forms;
  sdcons::Gains gains;
  sdcons::Coupling coupling;
  double tau_bar;
  double alpha;
  std::variant<sdcons::lmi::ConsensusCertificate, sdcons::lmi::NetworkNotFound> result;
};

namespace {

thread_local std::string last_error;

sdcons_status fail(sdcons_status status, const std::string& message) {
  last_error = message;
  return status;
}

template <class F>
sdcons_status guarded(F&& body) {
  try {
    last_error.clear();
    return body();
  } catch (const sdcons::InvalidArgument& e) {
    return fail(SDCONS_INVALID_ARGUMENT, e.what());
  } catch (const sdcons::NumericalError& e) {
    return fail(SDCONS_NUMERICAL_FAILURE, e.what());
  } catch (const std::bad_alloc&) {
    return fail(SDCONS_INTERNAL_ERROR, "out of memory");
  } catch (const std::exception& e) {
    return fail(SDCONS_INTERNAL_ERROR, e.what());
  } catch (...) {
    return fail(SDCONS_INTERNAL_ERROR, "unknown exception");
  }
}

#define SDCONS_REQUIRE(ptr)                                                  \
  do {                                                                       \
    if (!(ptr)) return fail(SDCONS_INVALID_ARGUMENT, #ptr " is NULL");       \
  } while (0)

sdcons::Coupling to_coupling(sdcons_variant v) {
  switch (v) {
    case SDCONS_FULL_PD: return sdcons::Coupling::full_pd;
    case SDCONS_POSITION_ONLY: return sdcons::Coupling::position_only;
  }
  throw sdcons::InvalidArgument("unknown coupling variant " + std::to_string(int(v)));
}

sdcons::Gains to_gains(sdcons_gains g) { return sdcons::Gains::make(g.k_p, g.k_d); }

sdcons::lmi::CertifyOptions to_options(const sdcons_solver_options* o) {
  sdcons::lmi::CertifyOptions out;
  if (!o) return out;
  if (o->budget <= 0) throw sdcons::InvalidArgument("solver budget must be positive");
  if (o->restarts <= 0) throw sdcons::InvalidArgument("solver restarts must be positive");
  if (!(o->margin > 0)) throw sdcons::InvalidArgument("solver margin must be positive");
  out.solver.budget = o->budget;
  out.solver.restarts = o->restarts;
  out.solver.seed = o->seed;
  out.solver.margin = o->margin;
  switch (o->psi12) {
    case SDCONS_PSI12_LEMMA: out.forms.psi12 = sdcons::lmi::Psi12Form::lemma; break;
    case SDCONS_PSI12_DERIVATION: out.forms.psi12 = sdcons::lmi::Psi12Form::derivation; break;
    default: throw sdcons::InvalidArgument("unknown psi12 form");
  }
  switch (o->psi22) {
    case SDCONS_PSI22_LEMMA: out.forms.psi22 = sdcons::lmi::Psi22Form::lemma; break;
    case SDCONS_PSI22_CORRECTED: out.forms.psi22 = sdcons::lmi::Psi22Form::corrected; break;
    default: throw sdcons::InvalidArgument("unknown psi22 form");
  }
  return out;
}

void copy_matrix(const Eigen::MatrixXd& m, double* out) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) out[i * m.cols() + j] = m(i, j);
}

Eigen::VectorXd read_vector(const double* p, int n) {
  return Eigen::Map<const Eigen::VectorXd>(p, n);
}

template <class Writer>
sdcons_status write_file(const char* path, Writer&& writer) {
  std::ofstream out(path, std::ios::binary);
  if (!out) return fail(SDCONS_IO_ERROR, std::string("cannot open ") + path);
  writer(out);
  out.flush();
  if (!out) return fail(SDCONS_IO_ERROR, std::string("write failed: ") + path);
  return SDCONS_OK;
}

}  // namespace

extern "C" {

const char* sdcons_last_error(void) { return last_error.c_str(); }

const char* sdcons_version(void) { return "1.0.0"; }

void sdcons_string_free(char* text) { std::free(text); }

// graph

sdcons_status sdcons_topology_create(int n, const int* edges, size_t edge_count,
                                     sdcons_topology** out) {
  return guarded([&] {
    SDCONS_REQUIRE(out);
    if (edge_count > 0) SDCONS_REQUIRE(edges);
    std::vector<sdcons::Edge> list(edge_count);
    for (size_t i = 0; i < edge_count; ++i) list[i] = {edges[2 * i], edges[2 * i + 1]};
    *out = new sdcons_topology{sdcons::Topology::from_edges(n, list)};
    return SDCONS_OK;
  });
}

sdcons_status sdcons_topology_parse(const char* text, int n, sdcons_topology** out) {
  return guarded([&] {
    SDCONS_REQUIRE(text);
    SDCONS_REQUIRE(out);
    std::istringstream in(text);
    std::optional<int> count;
    if (n > 0) count = n;
    *out = new sdcons_topology{sdcons::parse_edge_list(in, count)};
    return SDCONS_OK;
  });
}

sdcons_status sdcons_topology_six_agent(sdcons_topology** out) {
  return guarded([&] {
    SDCONS_REQUIRE(out);
    *out = new sdcons_topology{sdcons::six_agent_topology()};
    return SDCONS_OK;
  });
}

void sdcons_topology_destroy(sdcons_topology* topology) { delete topology; }

int sdcons_topology_size(const sdcons_topology* topology) {
  return topology ? topology->value.size() : 0;
}

sdcons_status sdcons_topology_degrees(const sdcons_topology* topology, int* degrees) {
  return guarded([&] {
    SDCONS_REQUIRE(topology);
    SDCONS_REQUIRE(degrees);
    const auto& d = topology->value.degrees();
    std::copy(d.begin(), d.end(), degrees);
    return SDCONS_OK;
  });
}

sdcons_status sdcons_topology_is_connected(const sdcons_topology* topology, int* connected) {
  return guarded([&] {
    SDCONS_REQUIRE(topology);
    SDCONS_REQUIRE(connected);
    *connected = sdcons::is_connected(topology->value) ? 1 : 0;
    return SDCONS_OK;
  });
}

sdcons_status sdcons_topology_weighted_adjacency(const sdcons_topology* topology,
                                                 double* out) {
  return guarded([&] {
    SDCONS_REQUIRE(topology);
    SDCONS_REQUIRE(out);
    copy_matrix(sdcons::weighted_adjacency(topology->value), out);
    return SDCONS_OK;
  });
}

sdcons_status sdcons_topology_spectrum(const sdcons_topology* topology, double* eigenvalues,
                                       double* modal, double* modal_inverse) {
  return guarded([&] {
    SDCONS_REQUIRE(topology);
    SDCONS_REQUIRE(eigenvalues);
    const auto s = sdcons::spectrum(topology->value);
    for (Eigen::Index i = 0; i < s.eigenvalues.size(); ++i) eigenvalues[i] = s.eigenvalues(i);
    if (modal) copy_matrix(s.modal_matrix, modal);
    if (modal_inverse) copy_matrix(s.modal_inverse, modal_inverse);
    return SDCONS_OK;
  });
}

// sampling

sdcons_status sdcons_schedule_sample(uint64_t seed, double tau_min, double tau_bar,
                                     double horizon, sdcons_schedule** out) {
  return guarded([&] {
    SDCONS_REQUIRE(out);
    *out = new sdcons_schedule{sdcons::SamplingSchedule::sample(seed, tau_min, tau_bar, horizon)};
    return SDCONS_OK;
  });
}

sdcons_status sdcons_schedule_create(const double* instants, size_t count, double tau_bar,
                                     sdcons_schedule** out) {
  return guarded([&] {
    SDCONS_REQUIRE(instants);
    SDCONS_REQUIRE(out);
    std::vector<double> t(instants, instants + count);
    *out = new sdcons_schedule{sdcons::SamplingSchedule::from_instants(std::move(t), tau_bar)};
    return SDCONS_OK;
  });
}

void sdcons_schedule_destroy(sdcons_schedule* schedule) { delete schedule; }

size_t sdcons_schedule_size(const sdcons_schedule* schedule) {
  return schedule ? schedule->value.size() : 0;
}

sdcons_status sdcons_schedule_instants(const sdcons_schedule* schedule, double* out) {
  return guarded([&] {
    SDCONS_REQUIRE(schedule);
    SDCONS_REQUIRE(out);
    const auto& t = schedule->value.instants();
    std::copy(t.begin(), t.end(), out);
    return SDCONS_OK;
  });
}

sdcons_status sdcons_schedule_write_csv(const sdcons_schedule* schedule, const char* path) {
  return guarded([&] {
    SDCONS_REQUIRE(schedule);
    SDCONS_REQUIRE(path);
    return write_file(path, [&](std::ostream& o) { sdcons::write_schedule_csv(o, schedule->value); });
  });
}

// dynamics

sdcons_status sdcons_expm2(sdcons_gains gains, double dt, double* out) {
  return guarded([&] {
    SDCONS_REQUIRE(out);
    copy_matrix(sdcons::expm2(to_gains(gains), dt), out);
    return SDCONS_OK;
  });
}

sdcons_status sdcons_step_matrix(sdcons_gains gains, sdcons_variant variant, double lambda,
                                 double dt, double* out) {
  return guarded([&] {
    SDCONS_REQUIRE(out);
    copy_matrix(sdcons::step_matrix(to_gains(gains), to_coupling(variant), lambda, dt), out);
    return SDCONS_OK;
  });
}

sdcons_status sdcons_simulate(const sdcons_topology* topology, sdcons_gains gains,
                              sdcons_variant variant, const sdcons_schedule* schedule,
                              const double* x0, const double* v0, double grid_step,
                              double horizon, int modal, sdcons_trajectory** out) {
  return guarded([&] {
    SDCONS_REQUIRE(topology);
    SDCONS_REQUIRE(schedule);
    SDCONS_REQUIRE(x0);
    SDCONS_REQUIRE(v0);
    SDCONS_REQUIRE(out);
    const int n = topology->value.size();
    const auto x = read_vector(x0, n), v = read_vector(v0, n);
    auto run = modal ? &sdcons::simulate_modal : &sdcons::simulate;
    *out = new sdcons_trajectory{run(topology->value, to_gains(gains), to_coupling(variant),
                                     schedule->value, x, v, grid_step, horizon)};
    return SDCONS_OK;
  });
}

void sdcons_trajectory_destroy(sdcons_trajectory* trajectory) { delete trajectory; }

size_t sdcons_trajectory_length(const sdcons_trajectory* trajectory) {
  return trajectory ? trajectory->value.states.size() : 0;
}

sdcons_status sdcons_trajectory_state(const sdcons_trajectory* trajectory, size_t index,
                                      double* t, double* x, double* v, int* is_sample) {
  return guarded([&] {
    SDCONS_REQUIRE(trajectory);
    const auto& states = trajectory->value.states;
    if (index >= states.size())
      return fail(SDCONS_INVALID_ARGUMENT, "state index " + std::to_string(index) +
                                               " out of range (" +
                                               std::to_string(states.size()) + " states)");
    const auto& s = states[index];
    if (t) *t = s.t;
    if (x) std::copy(s.x.data(), s.x.data() + s.x.size(), x);
    if (v) std::copy(s.v.data(), s.v.data() + s.v.size(), v);
    if (is_sample) *is_sample = s.is_sample ? 1 : 0;
    return SDCONS_OK;
  });
}

sdcons_status sdcons_trajectory_disagreement(const sdcons_trajectory* trajectory,
                                             double* out) {
  return guarded([&] {
    SDCONS_REQUIRE(trajectory);
    SDCONS_REQUIRE(out);
    const auto d = sdcons::disagreement(trajectory->value);
    std::copy(d.begin(), d.end(), out);
    return SDCONS_OK;
  });
}

sdcons_status sdcons_trajectory_write_csv(const sdcons_trajectory* trajectory,
                                          const char* path) {
  return guarded([&] {
    SDCONS_REQUIRE(trajectory);
    SDCONS_REQUIRE(path);
    return write_file(path,
                      [&](std::ostream& o) { sdcons::write_trajectory_csv(o, trajectory->value); });
  });
}

sdcons_status sdcons_trajectory_write_disagreement_csv(const sdcons_trajectory* trajectory,
                                                       const char* path) {
  return guarded([&] {
    SDCONS_REQUIRE(trajectory);
    SDCONS_REQUIRE(path);
    return write_file(
        path, [&](std::ostream& o) { sdcons::write_disagreement_csv(o, trajectory->value); });
  });
}

// uem

sdcons_status sdcons_beta(sdcons_gains gains, double T, double* out) {
  return guarded([&] {
    SDCONS_REQUIRE(out);
    *out = sdcons::beta(to_gains(gains), T);
    return SDCONS_OK;
  });
}

sdcons_status sdcons_mu(sdcons_gains gains, double T, double* out) {
  return guarded([&] {
    SDCONS_REQUIRE(out);
    *out = sdcons::mu(to_gains(gains), T);
    return SDCONS_OK;
  });
}

sdcons_status sdcons_consensus_value(sdcons_gains gains, const sdcons_schedule* schedule,
                                     double z0, double zdot0, double tolerance, double* out) {
  return guarded([&] {
    SDCONS_REQUIRE(schedule);
    SDCONS_REQUIRE(out);
    *out = sdcons::consensus_value(to_gains(gains), schedule->value, z0, zdot0, tolerance);
    return SDCONS_OK;
  });
}

sdcons_status sdcons_network_consensus_value(const sdcons_topology* topology,
                                             sdcons_gains gains,
                                             const sdcons_schedule* schedule,
                                             const double* x0, const double* v0,
                                             double tolerance, double* out) {
  return guarded([&] {
    SDCONS_REQUIRE(topology);
    SDCONS_REQUIRE(schedule);
    SDCONS_REQUIRE(x0);
    SDCONS_REQUIRE(v0);
    SDCONS_REQUIRE(out);
    const int n = topology->value.size();
    const auto s = sdcons::spectrum(topology->value);
    const Eigen::RowVectorXd w = s.modal_inverse.row(0);
    const double z0 = w.dot(read_vector(x0, n)), zdot0 = w.dot(read_vector(v0, n));
    *out = sdcons::consensus_value(to_gains(gains), schedule->value, z0, zdot0, tolerance);
    return SDCONS_OK;
  });
}

// certification

void sdcons_solver_options_default(sdcons_solver_options* options) {
  if (!options) return;
  const sdcons::lmi::CertifyOptions d;
  options->budget = d.solver.budget;
  options->restarts = d.solver.restarts;
  options->seed = d.solver.seed;
  options->margin = d.solver.margin;
  options->psi12 = d.forms.psi12 == sdcons::lmi::Psi12Form::lemma ? SDCONS_PSI12_LEMMA
                                                                 : SDCONS_PSI12_DERIVATION;
  options->psi22 = d.forms.psi22 == sdcons::lmi::Psi22Form::lemma ? SDCONS_PSI22_LEMMA
                                                                 : SDCONS_PSI22_CORRECTED;
}

sdcons_status sdcons_certify(const sdcons_topology* topology, sdcons_gains gains,
                             sdcons_variant variant, double tau_bar, double alpha,
                             const sdcons_solver_options* options,
                             sdcons_certificate** out) {
  return guarded([&] {
    SDCONS_REQUIRE(topology);
    SDCONS_REQUIRE(out);
    const auto g = to_gains(gains);
    const auto c = to_coupling(variant);
    const auto opts = to_options(options);
    auto result = sdcons::lmi::certify_network(topology->value, g, c, tau_bar, alpha, opts);
    const bool ok = std::holds_alternative<sdcons::lmi::ConsensusCertificate>(result);
    *out = new sdcons_certificate{topology->value, opts.forms, g, c, tau_bar, alpha,
                                  std::move(result)};
    return ok ? SDCONS_OK : SDCONS_NOT_FOUND;
  });
}

sdcons_status sdcons_max_alpha(const sdcons_topology* topology, sdcons_gains gains,
                               sdcons_variant variant, double tau_bar, double tolerance,
                               const sdcons_solver_options* options, double* alpha,
                               sdcons_certificate** out) {
  return guarded([&] {
    SDCONS_REQUIRE(topology);
    SDCONS_REQUIRE(alpha);
    if (out) *out = nullptr;
    const auto g = to_gains(gains);
    const auto c = to_coupling(variant);
    const auto opts = to_options(options);
    auto best = sdcons::lmi::max_alpha(topology->value, g, c, tau_bar, tolerance, opts);
    if (!best) {
      *alpha = std::numeric_limits<double>::quiet_NaN();
      return fail(SDCONS_NOT_FOUND, "no certificate at the lower bracket alpha = 1e-3");
    }
    *alpha = best->alpha;
    if (out)
      *out = new sdcons_certificate{topology->value, opts.forms, g, c, tau_bar, best->alpha,
                                    std::move(best->certificate)};
    return SDCONS_OK;
  });
}

void sdcons_certificate_destroy(sdcons_certificate* certificate) { delete certificate; }

int sdcons_certificate_feasible(const sdcons_certificate* certificate) {
  return certificate &&
         std::holds_alternative<sdcons::lmi::ConsensusCertificate>(certificate->result);
}

double sdcons_certificate_alpha(const sdcons_certificate* certificate) {
  return certificate ? certificate->alpha : std::numeric_limits<double>::quiet_NaN();
}

double sdcons_certificate_failing_lambda(const sdcons_certificate* certificate) {
  if (!certificate) return std::numeric_limits<double>::quiet_NaN();
  if (auto* nf = std::get_if<sdcons::lmi::NetworkNotFound>(&certificate->result))
    return nf->failing.lambda;
  return std::numeric_limits<double>::quiet_NaN();
}

static const std::vector<sdcons::lmi::ModeCertificate>& modes_of(const sdcons_certificate& c) {
  if (auto* ok = std::get_if<sdcons::lmi::ConsensusCertificate>(&c.result)) return ok->modes;
  return std::get<sdcons::lmi::NetworkNotFound>(c.result).certified;
}

size_t sdcons_certificate_mode_count(const sdcons_certificate* certificate) {
  return certificate ? modes_of(*certificate).size() : 0;
}

sdcons_status sdcons_certificate_mode(const sdcons_certificate* certificate, size_t index,
                                      sdcons_mode_certificate* out) {
  return guarded([&] {
    SDCONS_REQUIRE(certificate);
    SDCONS_REQUIRE(out);
    const auto& modes = modes_of(*certificate);
    if (index >= modes.size())
      return fail(SDCONS_INVALID_ARGUMENT, "mode index " + std::to_string(index) +
                                               " out of range (" +
                                               std::to_string(modes.size()) + " modes)");
    const auto& m = modes[index];
    out->lambda = m.lambda;
    out->alpha = m.alpha;
    out->multiplicity = m.multiplicity;
    copy_matrix(m.variables.P, out->P);
    copy_matrix(m.variables.S, out->S);
    copy_matrix(m.variables.R, out->R);
    copy_matrix(m.variables.Q1, out->Q1);
    copy_matrix(m.variables.Q2, out->Q2);
    std::copy(m.margins.begin(), m.margins.end(), out->margins);
    out->solver_iterations = m.solver_iterations;
    return SDCONS_OK;
  });
}

sdcons_status sdcons_certificate_reverify(const sdcons_certificate* certificate, int* ok) {
  return guarded([&] {
    SDCONS_REQUIRE(certificate);
    SDCONS_REQUIRE(ok);
    auto* cert = std::get_if<sdcons::lmi::ConsensusCertificate>(&certificate->result);
    if (!cert) return fail(SDCONS_NOT_FOUND, "certificate is not feasible");
    *ok = sdcons::lmi::reverify(*cert) ? 1 : 0;
    return SDCONS_OK;
  });
}

sdcons_status sdcons_certificate_to_json(const sdcons_certificate* certificate, char** json) {
  return guarded([&] {
    SDCONS_REQUIRE(certificate);
    SDCONS_REQUIRE(json);
    std::string text;
    if (auto* cert = std::get_if<sdcons::lmi::ConsensusCertificate>(&certificate->result))
      text = sdcons::lmi::to_json(*cert);
    else
      text = sdcons::lmi::to_json(std::get<sdcons::lmi::NetworkNotFound>(certificate->result),
                                  certificate->topology, certificate->gains,
                                  certificate->coupling, certificate->tau_bar,
                                  certificate->forms);
    char* buffer = static_cast<char*>(std::malloc(text.size() + 1));
    if (!buffer) return fail(SDCONS_INTERNAL_ERROR, "out of memory");
    std::memcpy(buffer, text.c_str(), text.size() + 1);
    *json = buffer;
    return SDCONS_OK;
  });
}

}  // extern "C"
