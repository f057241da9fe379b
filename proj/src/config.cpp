// Copyright 2026 The ranging-slam Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "rslam/config.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>

namespace rslam {
namespace {

struct Binding {
  std::string key;  // "section.name"
  std::function<std::string(const ExperimentConfig&)> get;
  std::function<void(ExperimentConfig&, const std::string&)> set;
};

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

double parse_double(const std::string& v) {
  std::size_t used = 0;
  const double out = std::stod(v, &used);
  if (trim(v.substr(used)).size()) throw std::runtime_error("trailing characters in '" + v + "'");
  return out;
}

template <typename T>
std::vector<T> parse_list(const std::string& v) {
  std::vector<T> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    if constexpr (std::is_same_v<T, int>) {
      out.push_back(std::stoi(item));
    } else if constexpr (std::is_same_v<T, std::uint64_t>) {
      out.push_back(std::stoull(item));
    } else {
      out.push_back(parse_double(item));
    }
  }
  return out;
}

template <typename T>
std::string format_list(const std::vector<T>& v) {
  std::ostringstream out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out << ",";
    if constexpr (std::is_floating_point_v<T>) {
      char buf[40];
      std::snprintf(buf, sizeof(buf), "%.12g", v[i]);
      out << buf;
    } else {
      out << v[i];
    }
  }
  return out.str();
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

#define BIND_DOUBLE(keyname, field)                                        \
  {keyname, [](const ExperimentConfig& c) { return format_double(c.field); }, \
   [](ExperimentConfig& c, const std::string& v) { c.field = parse_double(v); }}
#define BIND_INT(keyname, field)                                          \
  {keyname, [](const ExperimentConfig& c) { return std::to_string(c.field); }, \
   [](ExperimentConfig& c, const std::string& v) { c.field = std::stoi(v); }}
#define BIND_U64(keyname, field)                                          \
  {keyname, [](const ExperimentConfig& c) { return std::to_string(c.field); }, \
   [](ExperimentConfig& c, const std::string& v) { c.field = std::stoull(v); }}
#define BIND_BOOL(keyname, field)                                                       \
  {keyname, [](const ExperimentConfig& c) { return std::string(c.field ? "true" : "false"); }, \
   [](ExperimentConfig& c, const std::string& v) {                                      \
     if (v == "true" || v == "1") c.field = true;                                       \
     else if (v == "false" || v == "0") c.field = false;                                \
     else throw std::runtime_error("expected true/false for " keyname);                 \
   }}
#define BIND_STRING(keyname, field)                                \
  {keyname, [](const ExperimentConfig& c) { return c.field; },     \
   [](ExperimentConfig& c, const std::string& v) { c.field = v; }}

const std::vector<Binding>& bindings() {
  static const std::vector<Binding> table = {
      BIND_INT("scenario.robots", scenario.n_robots),
      BIND_DOUBLE("scenario.duration", scenario.duration),
      BIND_DOUBLE("scenario.speed", scenario.speed_limit),
      BIND_DOUBLE("scenario.arena_width", scenario.arena_width),
      BIND_DOUBLE("scenario.arena_height", scenario.arena_height),
      BIND_DOUBLE("scenario.turn_rate", scenario.turn_rate),
      BIND_U64("scenario.seed", scenario.seed),
      BIND_DOUBLE("noise.odom_trans_sigma", noise.odom_trans_sigma),
      BIND_DOUBLE("noise.odom_rot_sigma", noise.odom_rot_sigma),
      BIND_DOUBLE("noise.uwb_sigma", noise.uwb_sigma),
      BIND_DOUBLE("noise.nlos_probability", noise.nlos_probability),
      BIND_DOUBLE("noise.nlos_bias_scale", noise.nlos_bias_scale),
      BIND_DOUBLE("noise.max_range", noise.max_range),
      BIND_DOUBLE("noise.uwb_rate", noise.uwb_rate),
      BIND_DOUBLE("noise.odom_rate", noise.odom_rate),
      BIND_INT("pipeline.tau", pipeline.tau),
      BIND_DOUBLE("pipeline.delta", pipeline.estimation.search.delta),
      BIND_BOOL("pipeline.median_radius", pipeline.estimation.search.median_radius),
      BIND_INT("pipeline.min_window", pipeline.estimation.min_window),
      BIND_DOUBLE("pipeline.min_excitation", pipeline.estimation.min_excitation),
      BIND_DOUBLE("pipeline.closure_sigma_trans", pipeline.estimation.sigma_trans),
      BIND_DOUBLE("pipeline.closure_sigma_rot", pipeline.estimation.sigma_rot),
      BIND_DOUBLE("pipeline.estimate_period", pipeline.estimate_period),
      BIND_INT("pipeline.keyframe_stride", pipeline.keyframe_stride),
      BIND_INT("pipeline.window_stride", pipeline.window_stride),
      BIND_DOUBLE("pcm.epsilon", pipeline.pcm.epsilon),
      BIND_INT("pcm.exact_cap", pipeline.pcm.exact_cap),
      BIND_DOUBLE("dpgo.update_rate", pipeline.dpgo.update_rate),
      BIND_INT("dpgo.max_rounds", pipeline.dpgo.max_rounds),
      BIND_DOUBLE("dpgo.step_tolerance", pipeline.dpgo.step_tolerance),
      BIND_INT("dpgo.inner_iterations", pipeline.dpgo.inner_iterations),
      BIND_DOUBLE("dpgo.min_information_sigma", pipeline.dpgo.min_information_sigma),
      BIND_DOUBLE("network.comm_range", net.comm_range),
      BIND_DOUBLE("network.latency", net.latency),
      BIND_DOUBLE("network.drop_probability", net.drop_probability),
      BIND_DOUBLE("network.ttl", net.ttl),
      BIND_STRING("run.dataset", dataset_path),
      BIND_STRING("run.output_dir", output_dir),
      BIND_BOOL("run.final_convergence", final_convergence),
      BIND_BOOL("run.parallel_nodes", parallel_nodes),
      BIND_INT("run.sweep_threads", sweep_threads),
      {"sweep.tau_list", [](const ExperimentConfig& c) { return format_list(c.tau_list); },
       [](ExperimentConfig& c, const std::string& v) { c.tau_list = parse_list<int>(v); }},
      {"sweep.epsilon_list", [](const ExperimentConfig& c) { return format_list(c.epsilon_list); },
       [](ExperimentConfig& c, const std::string& v) { c.epsilon_list = parse_list<double>(v); }},
      {"sweep.delta_list", [](const ExperimentConfig& c) { return format_list(c.delta_list); },
       [](ExperimentConfig& c, const std::string& v) { c.delta_list = parse_list<double>(v); }},
      {"sweep.range_fractions",
       [](const ExperimentConfig& c) { return format_list(c.range_fractions); },
       [](ExperimentConfig& c, const std::string& v) { c.range_fractions = parse_list<double>(v); }},
      {"sweep.odom_noise_scales",
       [](const ExperimentConfig& c) { return format_list(c.odom_noise_scales); },
       [](ExperimentConfig& c, const std::string& v) {
         c.odom_noise_scales = parse_list<double>(v);
       }},
      {"sweep.seeds", [](const ExperimentConfig& c) { return format_list(c.seeds); },
       [](ExperimentConfig& c, const std::string& v) { c.seeds = parse_list<std::uint64_t>(v); }},
  };
  return table;
}

#undef BIND_DOUBLE
#undef BIND_INT
#undef BIND_U64
#undef BIND_BOOL
#undef BIND_STRING

const Binding* find_binding(const std::string& key) {
  for (const Binding& b : bindings()) {
    if (b.key == key) return &b;
  }
  return nullptr;
}

}  // namespace

void apply_config_override(ExperimentConfig& cfg, const std::string& key,
                           const std::string& value) {
  const Binding* b = find_binding(key);
  if (b == nullptr) throw std::runtime_error("unknown config key '" + key + "'");
  try {
    b->set(cfg, trim(value));
  } catch (const std::exception& e) {
    throw std::runtime_error("config key '" + key + "': " + e.what());
  }
  finalize_config(cfg);
}

void load_config_file(ExperimentConfig& cfg, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file " + path);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    line = trim(line);
    if (line.empty() || line[0] == '#' || line[0] == ';') continue;
    if (line.front() == '[' && line.back() == ']') {
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = section + "." + trim(line.substr(0, eq));
    try {
      apply_config_override(cfg, key, line.substr(eq + 1));
    } catch (const std::exception& e) {
      throw std::runtime_error(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  finalize_config(cfg);
}

std::string format_config(const ExperimentConfig& cfg) {
  std::ostringstream out;
  std::string section;
  for (const Binding& b : bindings()) {
    const auto dot = b.key.find('.');
    const std::string sec = b.key.substr(0, dot);
    if (sec != section) {
      if (!section.empty()) out << "\n";
      out << "[" << sec << "]\n";
      section = sec;
    }
    out << b.key.substr(dot + 1) << " = " << b.get(cfg) << "\n";
  }
  return out.str();
}

void finalize_config(ExperimentConfig& cfg) {
  cfg.scenario.sample_rate = cfg.noise.uwb_rate;
  cfg.pipeline.sensors = cfg.noise;
  cfg.net.seed = cfg.noise.rng_seed = cfg.scenario.seed;
}

}  // namespace rslam
