/* SPDX-License-Identifier: Apache-2.0 */
/*
 * C interface to the sampled-data consensus library.
 *
 * Objects are opaque handles created by *_create / producing calls and
 * released with the matching *_destroy. Every call returns an sdcons_status;
 * on anything other than SDCONS_OK or SDCONS_NOT_FOUND the thread-local
 * message from sdcons_last_error() describes the failure. Matrices are
 * exchanged row-major. Agent indices are 1-based.
 */
#ifndef SDCONS_SDCONS_H
#define SDCONS_SDCONS_H

#include <stddef.h>
#include <stdint.h>

#if defined(SDCONS_BUILDING_LIBRARY)
#define SDCONS_API __attribute__((visibility("default")))
#else
#define SDCONS_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum sdcons_status {
  SDCONS_OK = 0,
  SDCONS_NOT_FOUND = 1,        /* solver budget exhausted, not a proof */
  SDCONS_INVALID_ARGUMENT = 2,
  SDCONS_NUMERICAL_FAILURE = 3,
  SDCONS_IO_ERROR = 4,
  SDCONS_INTERNAL_ERROR = 5
} sdcons_status;

typedef enum sdcons_variant {
  SDCONS_FULL_PD = 0,
  SDCONS_POSITION_ONLY = 1
} sdcons_variant;

typedef enum sdcons_psi12_form {
  SDCONS_PSI12_LEMMA = 0,
  SDCONS_PSI12_DERIVATION = 1
} sdcons_psi12_form;

typedef enum sdcons_psi22_form {
  SDCONS_PSI22_LEMMA = 0,
  SDCONS_PSI22_CORRECTED = 1
} sdcons_psi22_form;

typedef struct sdcons_gains {
  double k_p;
  double k_d;
} sdcons_gains;

typedef struct sdcons_solver_options {
  long budget;
  int restarts;
  uint64_t seed;
  double margin;
  sdcons_psi12_form psi12;
  sdcons_psi22_form psi22;
} sdcons_solver_options;

/* Variables and margins of one certified mode. margins = λ_max of
 * (−P, −S, −R, LMI1, LMI2). */
typedef struct sdcons_mode_certificate {
  double lambda;
  double alpha;
  int multiplicity;
  double P[4];
  double S[4];
  double R[4];
  double Q1[4];
  double Q2[4];
  double margins[5];
  long solver_iterations;
} sdcons_mode_certificate;

typedef struct sdcons_topology sdcons_topology;
typedef struct sdcons_schedule sdcons_schedule;
typedef struct sdcons_trajectory sdcons_trajectory;
typedef struct sdcons_certificate sdcons_certificate;

SDCONS_API const char* sdcons_last_error(void);
SDCONS_API const char* sdcons_version(void);
SDCONS_API void sdcons_string_free(char* text);

/* ---- graph -------------------------------------------------------------- */

/* edges holds 2*edge_count 1-based indices (a0, b0, a1, b1, ...). */
SDCONS_API sdcons_status sdcons_topology_create(int n, const int* edges, size_t edge_count,
                                                sdcons_topology** out);
/* Edge-list text, one "i j" pair per line; n <= 0 infers the node count. */
SDCONS_API sdcons_status sdcons_topology_parse(const char* text, int n, sdcons_topology** out);
SDCONS_API sdcons_status sdcons_topology_six_agent(sdcons_topology** out);
SDCONS_API void sdcons_topology_destroy(sdcons_topology* topology);
SDCONS_API int sdcons_topology_size(const sdcons_topology* topology);
SDCONS_API sdcons_status sdcons_topology_degrees(const sdcons_topology* topology, int* degrees);
SDCONS_API sdcons_status sdcons_topology_is_connected(const sdcons_topology* topology,
                                                      int* connected);
/* n*n row-major. */
SDCONS_API sdcons_status sdcons_topology_weighted_adjacency(const sdcons_topology* topology,
                                                            double* out);
/* eigenvalues: n, descending; modal / modal_inverse: n*n row-major or NULL. */
SDCONS_API sdcons_status sdcons_topology_spectrum(const sdcons_topology* topology,
                                                  double* eigenvalues, double* modal,
                                                  double* modal_inverse);

/* ---- sampling ----------------------------------------------------------- */

SDCONS_API sdcons_status sdcons_schedule_sample(uint64_t seed, double tau_min, double tau_bar,
                                                double horizon, sdcons_schedule** out);
SDCONS_API sdcons_status sdcons_schedule_create(const double* instants, size_t count,
                                                double tau_bar, sdcons_schedule** out);
SDCONS_API void sdcons_schedule_destroy(sdcons_schedule* schedule);
SDCONS_API size_t sdcons_schedule_size(const sdcons_schedule* schedule);
SDCONS_API sdcons_status sdcons_schedule_instants(const sdcons_schedule* schedule,
                                                  double* out);
SDCONS_API sdcons_status sdcons_schedule_write_csv(const sdcons_schedule* schedule,
                                                   const char* path);

/* ---- dynamics ----------------------------------------------------------- */

/* 2x2 row-major. */
SDCONS_API sdcons_status sdcons_expm2(sdcons_gains gains, double dt, double* out);
SDCONS_API sdcons_status sdcons_step_matrix(sdcons_gains gains, sdcons_variant variant,
                                            double lambda, double dt, double* out);

/* modal != 0 propagates through the eigenbasis instead of the direct form. */
SDCONS_API sdcons_status sdcons_simulate(const sdcons_topology* topology, sdcons_gains gains,
                                         sdcons_variant variant,
                                         const sdcons_schedule* schedule, const double* x0,
                                         const double* v0, double grid_step, double horizon,
                                         int modal, sdcons_trajectory** out);
SDCONS_API void sdcons_trajectory_destroy(sdcons_trajectory* trajectory);
SDCONS_API size_t sdcons_trajectory_length(const sdcons_trajectory* trajectory);
/* x and v receive n values each; either may be NULL. */
SDCONS_API sdcons_status sdcons_trajectory_state(const sdcons_trajectory* trajectory,
                                                 size_t index, double* t, double* x,
                                                 double* v, int* is_sample);
SDCONS_API sdcons_status sdcons_trajectory_disagreement(const sdcons_trajectory* trajectory,
                                                        double* out);
SDCONS_API sdcons_status sdcons_trajectory_write_csv(const sdcons_trajectory* trajectory,
                                                     const char* path);
SDCONS_API sdcons_status sdcons_trajectory_write_disagreement_csv(
    const sdcons_trajectory* trajectory, const char* path);

/* ---- unitary eigenvalue mode ------------------------------------------- */

SDCONS_API sdcons_status sdcons_beta(sdcons_gains gains, double T, double* out);
SDCONS_API sdcons_status sdcons_mu(sdcons_gains gains, double T, double* out);
SDCONS_API sdcons_status sdcons_consensus_value(sdcons_gains gains,
                                                const sdcons_schedule* schedule, double z0,
                                                double zdot0, double tolerance, double* out);
/* Consensus value of a full network state: z0 = δᵀx0/Σδ, ż0 = δᵀv0/Σδ. */
SDCONS_API sdcons_status sdcons_network_consensus_value(const sdcons_topology* topology,
                                                        sdcons_gains gains,
                                                        const sdcons_schedule* schedule,
                                                        const double* x0, const double* v0,
                                                        double tolerance, double* out);

/* ---- certification ------------------------------------------------------ */

SDCONS_API void sdcons_solver_options_default(sdcons_solver_options* options);

/* SDCONS_OK with a feasible certificate or SDCONS_NOT_FOUND with a
 * certificate object describing the failing mode; both set *out. */
SDCONS_API sdcons_status sdcons_certify(const sdcons_topology* topology, sdcons_gains gains,
                                        sdcons_variant variant, double tau_bar, double alpha,
                                        const sdcons_solver_options* options,
                                        sdcons_certificate** out);
/* Bisection for the largest certifiable alpha. SDCONS_NOT_FOUND when even
 * the lower bracket 1e-3 fails (then *out is NULL). */
SDCONS_API sdcons_status sdcons_max_alpha(const sdcons_topology* topology, sdcons_gains gains,
                                          sdcons_variant variant, double tau_bar,
                                          double tolerance,
                                          const sdcons_solver_options* options,
                                          double* alpha, sdcons_certificate** out);
SDCONS_API void sdcons_certificate_destroy(sdcons_certificate* certificate);
SDCONS_API int sdcons_certificate_feasible(const sdcons_certificate* certificate);
SDCONS_API double sdcons_certificate_alpha(const sdcons_certificate* certificate);
/* NaN when the certificate is feasible. */
SDCONS_API double sdcons_certificate_failing_lambda(const sdcons_certificate* certificate);
SDCONS_API size_t sdcons_certificate_mode_count(const sdcons_certificate* certificate);
SDCONS_API sdcons_status sdcons_certificate_mode(const sdcons_certificate* certificate,
                                                 size_t index, sdcons_mode_certificate* out);
/* Recomputes every margin from the stored variables. */
SDCONS_API sdcons_status sdcons_certificate_reverify(const sdcons_certificate* certificate,
                                                     int* ok);
/* Caller frees *json with sdcons_string_free. */
SDCONS_API sdcons_status sdcons_certificate_to_json(const sdcons_certificate* certificate,
                                                    char** json);

#ifdef __cplusplus
}
#endif

#endif /* SDCONS_SDCONS_H */
