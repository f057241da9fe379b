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

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "rslam/experiment.hpp"

namespace {

using rslam::ExperimentConfig;

struct CommonArgs {
  std::string config_file;
  std::vector<std::string> overrides;  // section.key=value
  bool print_config = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("-c,--config", args.config_file, "config file (sectioned key = value text)");
  cmd->add_option("-s,--set", args.overrides,
                  "override a config key, e.g. --set pipeline.tau=100 (repeatable; applied after "
                  "the config file)");
  cmd->add_flag("--print-config", args.print_config, "print the effective config and exit");
}

// defaults < config file < --set overrides
ExperimentConfig build_config(const CommonArgs& args) {
  ExperimentConfig cfg;
  rslam::finalize_config(cfg);
  if (!args.config_file.empty()) rslam::load_config_file(cfg, args.config_file);
  for (const std::string& kv : args.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      throw std::runtime_error("--set expects section.key=value, got '" + kv + "'");
    }
    rslam::apply_config_override(cfg, kv.substr(0, eq), kv.substr(eq + 1));
  }
  return cfg;
}

bool handle_print(const CommonArgs& args, const ExperimentConfig& cfg) {
  if (!args.print_config) return false;
  std::cout << rslam::format_config(cfg);
  return true;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multi-robot UWB ranging SLAM batch runner"};
  app.require_subcommand(1);

  CommonArgs generate_args, run_args, sweep_args, metrics_args, plot_args;
  std::string generate_out = "dataset.txt";
  std::string run_dir, sweep_dir = "out", metrics_dir, plot_dir;
  std::string sweep_preset;
  std::string metrics_dataset;

  CLI::App* generate = app.add_subcommand("generate", "synthesize a scenario into a dataset file");
  add_common(generate, generate_args);
  generate->add_option("-o,--output", generate_out, "dataset file to write")->capture_default_str();

  CLI::App* run = app.add_subcommand("run", "run the full pipeline over a dataset or scenario");
  add_common(run, run_args);
  run->add_option("-o,--output-dir", run_dir, "output directory (default: run.output_dir)");

  CLI::App* sweep = app.add_subcommand("sweep", "run a parameter-sweep preset");
  add_common(sweep, sweep_args);
  sweep->add_option("-p,--preset", sweep_preset, "tab1|tab2|fig4|fig6|fig7|fig8|tab4")
      ->required();
  sweep->add_option("-o,--output-dir", sweep_dir, "output directory")->capture_default_str();

  CLI::App* metrics = app.add_subcommand("metrics", "recompute metrics from run outputs");
  add_common(metrics, metrics_args);
  metrics->add_option("-d,--dir", metrics_dir, "run output directory")->required();
  metrics->add_option("--dataset", metrics_dataset,
                      "dataset file with ground truth (default: run.dataset from config)");

  CLI::App* plot = app.add_subcommand("plot-data", "derive per-figure CSVs from run outputs");
  add_common(plot, plot_args);
  plot->add_option("-d,--dir", plot_dir, "directory holding run/sweep outputs")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (generate->parsed()) {
      const ExperimentConfig cfg = build_config(generate_args);
      if (handle_print(generate_args, cfg)) return 0;
      const rslam::GroundTruth truth = rslam::generate_trajectories(cfg.scenario);
      rslam::write_dataset(rslam::make_dataset(truth, cfg.noise), generate_out);
      std::cout << "wrote " << generate_out << "\n";
    } else if (run->parsed()) {
      const ExperimentConfig cfg = build_config(run_args);
      if (handle_print(run_args, cfg)) return 0;
      const std::string dir = run_dir.empty() ? cfg.output_dir : run_dir;
      const rslam::RunArtifacts artifacts = rslam::run_experiment(cfg);
      rslam::write_run_outputs(artifacts, cfg, dir);
      if (artifacts.have_metrics) std::cout << rslam::format_metrics(artifacts.metrics);
      std::cout << "outputs in " << dir << "\n";
    } else if (sweep->parsed()) {
      const ExperimentConfig cfg = build_config(sweep_args);
      if (handle_print(sweep_args, cfg)) return 0;
      rslam::run_sweep_preset(cfg, sweep_preset, sweep_dir);
      std::cout << "sweep " << sweep_preset << " written to " << sweep_dir << "\n";
    } else if (metrics->parsed()) {
      ExperimentConfig cfg = build_config(metrics_args);
      if (handle_print(metrics_args, cfg)) return 0;
      const std::string ds_path =
          metrics_dataset.empty() ? cfg.dataset_path : metrics_dataset;
      if (ds_path.empty()) {
        throw std::runtime_error("metrics: need a dataset with ground truth (--dataset)");
      }
      const rslam::Dataset ds = rslam::read_dataset(ds_path);
      if (!ds.truth) throw std::runtime_error("metrics: dataset has no GT records");
      rslam::SimulationResult sim;
      sim.trajectories = rslam::read_trajectories(metrics_dir + "/estimate.txt");
      sim.raw_closures = rslam::read_closures(metrics_dir + "/closures_raw.txt");
      sim.inlier_closures = rslam::read_closures(metrics_dir + "/closures_inlier.txt");
      const rslam::MetricsReport report = rslam::compute_metrics(sim, *ds.truth);
      std::ofstream(metrics_dir + "/metrics.txt") << rslam::format_metrics(report);
      std::ofstream(metrics_dir + "/metrics.csv") << rslam::format_metrics_csv(report);
      std::cout << rslam::format_metrics(report);
    } else if (plot->parsed()) {
      const ExperimentConfig cfg = build_config(plot_args);
      if (handle_print(plot_args, cfg)) return 0;
      for (const std::string& f : rslam::emit_plot_data(plot_dir)) {
        std::cout << "wrote " << plot_dir << "/" << f << "\n";
      }
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
