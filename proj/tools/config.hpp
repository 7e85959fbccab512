// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sdcons/sdcons.h"

namespace cli {

// field-level problem in the experiment config
struct ConfigError : std::runtime_error {
  ConfigError(const std::string& field, const std::string& what)
      : std::runtime_error(field + ": " + what) {}
};

struct InitialState {
  enum class Kind { explicit_vectors, random_uniform, paper_default } kind = Kind::paper_default;
  std::vector<double> x0, v0;
  std::pair<double, double> x_range{-5.0, 5.0};
  std::pair<double, double> v_range{-1.0, 1.0};
};

struct ExperimentConfig {
  int n = 0;
  std::vector<std::pair<int, int>> edges;
  std::string graph_text;  // set when read from an edge-list file
  double k_p = 1.0;
  double k_d = 2.0;
  double tau_bar = 1.0;
  double tau_min = 0.1;
  sdcons_variant variant = SDCONS_FULL_PD;
  std::optional<double> alpha;
  double horizon = 60.0;
  double grid_step = 0.05;
  std::uint64_t seed = 0;
  InitialState initial;
};

// Six agents, k_p = 1, k_d = 2, tau_bar = 1.
ExperimentConfig paper_config();

ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config(const std::string& text, const std::string& base_dir);

// Resolves the initial state for n agents; generators draw from seed.
void initial_state(const ExperimentConfig& config, int n, std::vector<double>& x0,
                   std::vector<double>& v0);

sdcons_variant parse_variant(const std::string& name);
const char* variant_name(sdcons_variant v);

}  // namespace cli
