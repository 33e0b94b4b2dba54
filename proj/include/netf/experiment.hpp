#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "netf/trainer.hpp"

namespace netf {

struct UfmPreset {
  Eigen::Index d;
  Eigen::Index C;
  Eigen::Index N;
  double learning_rate;
};

// UFM-10/100/200/1000 sizes with per-preset default learning rates.
const std::map<std::string, UfmPreset>& ufm_presets();

struct ExperimentConfig {
  std::string name = "experiment";
  std::string preset;  // empty -> custom dims below
  Eigen::Index d = 0, C = 0, N = 0;
  std::vector<ClassifierMode> modes = {ClassifierMode::standard, ClassifierMode::fixed_etf,
                                       ClassifierMode::implicit_etf};
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  TrainConfig train;
  std::vector<int> checkpoints = {500, 2000};
  std::filesystem::path output_dir = "out";
  bool has_learning_rate_override = false;

  static ExperimentConfig from_json_file(const std::filesystem::path& path);
  std::string to_json() const;
  void resolve();  // apply preset dims/learning rate, validate
};

struct RunOutcome {
  std::string run_id;
  std::uint64_t seed = 0;
  ClassifierMode mode = ClassifierMode::standard;
  bool ok = false;
  std::string error;
  double final_loss = 0.0;
  double final_top1 = 0.0;
  int first_interpolation_iter = -1;
  std::filesystem::path csv_path;
};

struct ExperimentSummary {
  std::vector<RunOutcome> runs;
  int failures = 0;
};

// Fixed-order CSV schema of the per-iteration trace. Timing is written to a
// separate sidecar so the trace is byte-identical across repeated runs.
extern const char* kMetricsHeader;

void write_run_csv(const std::filesystem::path& path, const std::string& run_id,
                   std::uint64_t seed, ClassifierMode mode, const std::vector<IterationRecord>& trace);
void write_timing_csv(const std::filesystem::path& path, const std::string& run_id,
                      const std::vector<IterationRecord>& trace);
void write_margins_csv(const std::filesystem::path& path, const std::vector<double>& margins);

ExperimentSummary run_experiment(const ExperimentConfig& config);

// Static SVG plots from run CSVs: one file per panel, one curve per mode with
// a median line and a min/max band across seeds.
int emit_plots(const std::vector<std::filesystem::path>& csvs,
               const std::vector<std::string>& panels, const std::filesystem::path& out_dir);

}  // namespace netf
