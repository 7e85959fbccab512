// SPDX-License-Identifier: Apache-2.0
#include "config.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <set>
#include <sstream>

#include "json.hpp"

namespace cli {

using nlohmann::json;

namespace {

const std::set<std::string> kKnownFields{"graph",   "k_p",     "k_d",       "tau_bar",
                                         "tau_min", "variant", "alpha",     "horizon",
                                         "grid_step", "seed",  "initial"};

double number(const json& j, const std::string& field) {
  if (!j.is_number()) throw ConfigError(field, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) throw ConfigError(field, "must be finite");
  return v;
}

double positive(const json& j, const std::string& field) {
  const double v = number(j, field);
  if (!(v > 0)) throw ConfigError(field, "must be positive, got " + j.dump());
  return v;
}

std::vector<double> vector_of(const json& j, const std::string& field) {
  if (!j.is_array()) throw ConfigError(field, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i)
    out.push_back(number(j[i], field + "[" + std::to_string(i) + "]"));
  return out;
}

std::pair<double, double> range_of(const json& j, const std::string& field) {
  const auto v = vector_of(j, field);
  if (v.size() != 2 || !(v[0] <= v[1]))
    throw ConfigError(field, "expected [low, high] with low <= high");
  return {v[0], v[1]};
}

void read_graph(const json& g, const std::string& base_dir, ExperimentConfig& c) {
  if (g.is_string()) {
    if (g.get<std::string>() != "paper")
      throw ConfigError("graph", "string form only accepts \"paper\"");
    const auto p = paper_config();
    c.n = p.n;
    c.edges = p.edges;
    return;
  }
  if (!g.is_object()) throw ConfigError("graph", "expected an object {n, edges} or {file}");
  if (g.contains("file")) {
    if (!g["file"].is_string()) throw ConfigError("graph.file", "expected a path string");
    std::string path = g["file"].get<std::string>();
    if (!path.empty() && path[0] != '/' && !base_dir.empty()) path = base_dir + "/" + path;
    std::ifstream in(path);
    if (!in) throw ConfigError("graph.file", "cannot read " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    c.graph_text = ss.str();
    if (g.contains("n")) {
      if (!g["n"].is_number_integer()) throw ConfigError("graph.n", "expected an integer");
      c.n = g["n"].get<int>();
    }
    return;
  }
  if (!g.contains("edges")) throw ConfigError("graph", "needs either \"edges\" or \"file\"");
  const json& e = g["edges"];
  if (!e.is_array()) throw ConfigError("graph.edges", "expected an array of [i, j] pairs");
  int largest = 0;
  for (std::size_t i = 0; i < e.size(); ++i) {
    const std::string f = "graph.edges[" + std::to_string(i) + "]";
    if (!e[i].is_array() || e[i].size() != 2 || !e[i][0].is_number_integer() ||
        !e[i][1].is_number_integer())
      throw ConfigError(f, "expected a pair of integers");
    const int a = e[i][0].get<int>(), b = e[i][1].get<int>();
    c.edges.emplace_back(a, b);
    largest = std::max({largest, a, b});
  }
  c.n = largest;
  if (g.contains("n")) {
    if (!g["n"].is_number_integer()) throw ConfigError("graph.n", "expected an integer");
    c.n = g["n"].get<int>();
  }
}

void read_initial(const json& j, ExperimentConfig& c) {
  auto& init = c.initial;
  if (j.is_string()) {
    const auto name = j.get<std::string>();
    if (name == "paper_default") init.kind = InitialState::Kind::paper_default;
    else if (name == "random_uniform") init.kind = InitialState::Kind::random_uniform;
    else throw ConfigError("initial", "unknown generator \"" + name + "\"");
    return;
  }
  if (!j.is_object()) throw ConfigError("initial", "expected an object or generator name");
  if (j.contains("x0") || j.contains("v0")) {
    if (!j.contains("x0") || !j.contains("v0"))
      throw ConfigError("initial", "explicit form needs both x0 and v0");
    init.kind = InitialState::Kind::explicit_vectors;
    init.x0 = vector_of(j["x0"], "initial.x0");
    init.v0 = vector_of(j["v0"], "initial.v0");
    return;
  }
  if (!j.contains("generator") || !j["generator"].is_string())
    throw ConfigError("initial.generator", "expected \"random_uniform\" or \"paper_default\"");
  const auto name = j["generator"].get<std::string>();
  if (name == "paper_default") {
    init.kind = InitialState::Kind::paper_default;
  } else if (name == "random_uniform") {
    init.kind = InitialState::Kind::random_uniform;
    if (j.contains("x_range")) init.x_range = range_of(j["x_range"], "initial.x_range");
    if (j.contains("v_range")) init.v_range = range_of(j["v_range"], "initial.v_range");
  } else {
    throw ConfigError("initial.generator", "unknown generator \"" + name + "\"");
  }
}

double unit(std::mt19937_64& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace

ExperimentConfig paper_config() {
  ExperimentConfig c;
  c.n = 6;
  c.edges = {{1, 2}, {1, 4}, {2, 4}, {3, 4}, {3, 6}, {4, 5}, {5, 6}};
  return c;
}

ExperimentConfig parse_config(const std::string& text, const std::string& base_dir) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("config", std::string("not valid JSON (") + e.what() + ")");
  }
  if (!j.is_object()) throw ConfigError("config", "top level must be an object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!kKnownFields.count(it.key())) throw ConfigError(it.key(), "unknown field");

  ExperimentConfig c;
  if (!j.contains("graph")) throw ConfigError("graph", "missing");
  read_graph(j["graph"], base_dir, c);
  if (j.contains("k_p")) c.k_p = positive(j["k_p"], "k_p");
  if (j.contains("k_d")) c.k_d = positive(j["k_d"], "k_d");
  if (j.contains("tau_bar")) c.tau_bar = positive(j["tau_bar"], "tau_bar");
  c.tau_min = j.contains("tau_min") ? positive(j["tau_min"], "tau_min") : c.tau_bar / 10.0;
  if (c.tau_min > c.tau_bar) throw ConfigError("tau_min", "must not exceed tau_bar");
  if (j.contains("variant")) {
    if (!j["variant"].is_string()) throw ConfigError("variant", "expected a string");
    try {
      c.variant = parse_variant(j["variant"].get<std::string>());
    } catch (const std::invalid_argument& e) {
      throw ConfigError("variant", e.what());
    }
  }
  if (j.contains("alpha") && !j["alpha"].is_null()) {
    c.alpha = positive(j["alpha"], "alpha");
    if (*c.alpha >= 1.0 / (2.0 * c.tau_bar))
      throw ConfigError("alpha", "must be below 1/(2 tau_bar)");
  }
  if (j.contains("horizon")) c.horizon = positive(j["horizon"], "horizon");
  c.grid_step = j.contains("grid_step") ? positive(j["grid_step"], "grid_step") : c.tau_bar / 20.0;
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) throw ConfigError("seed", "expected a non-negative integer");
    c.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("initial")) read_initial(j["initial"], c);
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("--config", "cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  const auto slash = path.find_last_of('/');
  return parse_config(ss.str(), slash == std::string::npos ? "" : path.substr(0, slash));
}

void initial_state(const ExperimentConfig& config, int n, std::vector<double>& x0,
                   std::vector<double>& v0) {
  const auto& init = config.initial;
  if (init.kind == InitialState::Kind::explicit_vectors) {
    if (static_cast<int>(init.x0.size()) != n)
      throw ConfigError("initial.x0", "has " + std::to_string(init.x0.size()) +
                                          " entries, graph has " + std::to_string(n) + " agents");
    if (static_cast<int>(init.v0.size()) != n)
      throw ConfigError("initial.v0", "has " + std::to_string(init.v0.size()) +
                                          " entries, graph has " + std::to_string(n) + " agents");
    x0 = init.x0;
    v0 = init.v0;
    return;
  }
  auto xr = init.x_range, vr = init.v_range;
  if (init.kind == InitialState::Kind::paper_default) {
    xr = {-5.0, 5.0};
    vr = {-1.0, 1.0};
  }
  // separate stream from the sampling schedule
  std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  x0.resize(n);
  v0.resize(n);
  for (auto& x : x0) x = xr.first + (xr.second - xr.first) * unit(rng);
  for (auto& v : v0) v = vr.first + (vr.second - vr.first) * unit(rng);
}

sdcons_variant parse_variant(const std::string& name) {
  if (name == "full_pd") return SDCONS_FULL_PD;
  if (name == "position_only") return SDCONS_POSITION_ONLY;
  throw std::invalid_argument("unknown variant \"" + name + "\" (full_pd | position_only)");
}

const char* variant_name(sdcons_variant v) {
  return v == SDCONS_POSITION_ONLY ? "position_only" : "full_pd";
}

}  // namespace cli
