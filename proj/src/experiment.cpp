#include "netf/experiment.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>
#include <stdexcept>

namespace netf {

using nlohmann::json;

const std::map<std::string, UfmPreset>& ufm_presets() {
  static const std::map<std::string, UfmPreset> presets = {
      {"ufm10", {512, 10, 1000, 5.0}},
      {"ufm100", {1024, 100, 5000, 10.0}},
      {"ufm200", {1024, 200, 5000, 10.0}},
      {"ufm1000", {1024, 1000, 10000, 10.0}},
  };
  return presets;
}

ExperimentConfig ExperimentConfig::from_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::runtime_error("config parse error: " + std::string(e.what()));
  }

  ExperimentConfig cfg;
  cfg.name = j.value("name", cfg.name);
  cfg.preset = j.value("preset", std::string{});
  if (j.contains("custom")) {
    cfg.d = j["custom"].value("d", 0);
    cfg.C = j["custom"].value("C", 0);
    cfg.N = j["custom"].value("N", 0);
  }
  if (j.contains("modes")) {
    cfg.modes.clear();
    for (const auto& m : j["modes"]) cfg.modes.push_back(mode_from_string(m.get<std::string>()));
  }
  if (j.contains("seeds")) {
    cfg.seeds.clear();
    for (const auto& s : j["seeds"]) cfg.seeds.push_back(s.get<std::uint64_t>());
  }
  cfg.train.iterations = j.value("iterations", cfg.train.iterations);
  if (j.contains("learning_rate")) {
    cfg.train.learning_rate = j["learning_rate"].get<double>();
    cfg.has_learning_rate_override = true;
  }
  cfg.train.tau = j.value("tau", cfg.train.tau);
  cfg.train.delta = j.value("delta", cfg.train.delta);
  cfg.train.batch_size = j.value("batch_size", cfg.train.batch_size);
  cfg.train.use_ddn_vjp = j.value("use_ddn_vjp", cfg.train.use_ddn_vjp);
  cfg.train.log_interval = j.value("log_interval", cfg.train.log_interval);
  cfg.train.solver_tol = j.value("solver_tol", cfg.train.solver_tol);
  if (j.contains("init_scheme")) {
    std::string s = j["init_scheme"].get<std::string>();
    if (s == "canonical")
      cfg.train.init_scheme = InitScheme::canonical;
    else if (s == "haar_random")
      cfg.train.init_scheme = InitScheme::haar_random;
    else
      throw std::runtime_error("config: unknown init_scheme '" + s + "'");
  }
  if (j.contains("checkpoints")) {
    cfg.checkpoints.clear();
    for (const auto& c : j["checkpoints"]) cfg.checkpoints.push_back(c.get<int>());
  }
  if (j.contains("output_dir")) cfg.output_dir = j["output_dir"].get<std::string>();
  return cfg;
}

void ExperimentConfig::resolve() {
  if (!preset.empty()) {
    auto it = ufm_presets().find(preset);
    if (it == ufm_presets().end()) throw std::runtime_error("unknown preset: " + preset);
    d = it->second.d;
    C = it->second.C;
    N = it->second.N;
    if (!has_learning_rate_override) train.learning_rate = it->second.learning_rate;
  }
  if (d < 2 || C < 2 || N < C) throw std::runtime_error("config: invalid dimensions");
  if (d < C) throw std::runtime_error("config: requires d >= C");
  if (const char* env = std::getenv("NETF_OUTPUT_DIR")) output_dir = env;
}

std::string ExperimentConfig::to_json() const {
  json j;
  j["name"] = name;
  if (!preset.empty()) j["preset"] = preset;
  j["custom"] = {{"d", d}, {"C", C}, {"N", N}};
  std::vector<std::string> mode_names;
  for (auto m : modes) mode_names.push_back(to_string(m));
  j["modes"] = mode_names;
  j["seeds"] = seeds;
  j["iterations"] = train.iterations;
  j["learning_rate"] = train.learning_rate;
  j["tau"] = train.tau;
  j["delta"] = train.delta;
  j["batch_size"] = train.batch_size;
  j["use_ddn_vjp"] = train.use_ddn_vjp;
  j["log_interval"] = train.log_interval;
  j["solver_tol"] = train.solver_tol;
  j["init_scheme"] = train.init_scheme == InitScheme::canonical ? "canonical" : "haar_random";
  j["checkpoints"] = checkpoints;
  j["output_dir"] = output_dir.string();
  return j.dump(2);
}

const char* kMetricsHeader =
    "run_id,seed,mode,iteration,loss,train_top1,nc1,nc2,nc3,nc4_agreement,equinorm_gap,"
    "mean_cosine_margin,inner_solve_iterations";

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

}  // namespace

void write_run_csv(const std::filesystem::path& path, const std::string& run_id,
                   std::uint64_t seed, ClassifierMode mode,
                   const std::vector<IterationRecord>& trace) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << kMetricsHeader << "\n";
  for (const auto& r : trace) {
    out << run_id << ',' << seed << ',' << to_string(mode) << ',' << r.iteration << ','
        << fmt(r.loss) << ',' << fmt(r.train_top1) << ',' << fmt(r.metrics.nc1) << ','
        << fmt(r.metrics.nc2) << ',' << fmt(r.metrics.nc3) << ','
        << fmt(r.metrics.nc4_agreement) << ',' << fmt(r.metrics.equinorm_gap) << ','
        << fmt(r.metrics.mean_cosine_margin) << ',' << r.inner_solve_iterations << "\n";
  }
}

void write_timing_csv(const std::filesystem::path& path, const std::string& run_id,
                      const std::vector<IterationRecord>& trace) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "run_id,iteration,inner_solve_seconds\n";
  for (const auto& r : trace)
    out << run_id << ',' << r.iteration << ',' << fmt(r.inner_solve_seconds) << "\n";
}

void write_margins_csv(const std::filesystem::path& path, const std::vector<double>& margins) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "sample,cosine_margin\n";
  for (std::size_t i = 0; i < margins.size(); ++i) out << i << ',' << fmt(margins[i]) << "\n";
}

ExperimentSummary run_experiment(const ExperimentConfig& config) {
  namespace fs = std::filesystem;
  fs::create_directories(config.output_dir);
  {
    std::ofstream echo(config.output_dir / (config.name + "_config.json"));
    echo << config.to_json() << "\n";
  }

  ExperimentSummary summary;
  for (ClassifierMode mode : config.modes) {
    for (std::uint64_t seed : config.seeds) {
      RunOutcome run;
      run.mode = mode;
      run.seed = seed;
      run.run_id = config.name + "_" + to_string(mode) + "_seed" + std::to_string(seed);
      run.csv_path = config.output_dir / (run.run_id + ".csv");
      try {
        UfmModel model = UfmModel::make(config.d, config.C, config.N, mode, seed);
        TrainConfig tc = config.train;
        tc.seed = seed;
        TrainResult result = train(model, tc);
        write_run_csv(run.csv_path, run.run_id, seed, mode, result.trace);
        write_timing_csv(config.output_dir / (run.run_id + "_timing.csv"), run.run_id,
                         result.trace);
        write_margins_csv(config.output_dir / (run.run_id + "_margins.csv"),
                          result.final_margins);
        run.ok = true;
        run.final_loss = result.trace.back().loss;
        run.final_top1 = result.trace.back().train_top1;
        run.first_interpolation_iter = result.first_interpolation_iter;
      } catch (const std::exception& e) {
        run.ok = false;
        run.error = e.what();
        ++summary.failures;
      }
      summary.runs.push_back(std::move(run));
    }
  }

  // Median and range of final loss / accuracy per mode.
  std::ofstream sum(config.output_dir / (config.name + "_summary.csv"));
  sum << "mode,metric,median,min,max\n";
  auto median_of = [](std::vector<double> v) {
    std::sort(v.begin(), v.end());
    std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
  };
  for (ClassifierMode mode : config.modes) {
    std::vector<double> losses, accs;
    for (const auto& r : summary.runs)
      if (r.ok && r.mode == mode) {
        losses.push_back(r.final_loss);
        accs.push_back(r.final_top1);
      }
    if (losses.empty()) continue;
    sum << to_string(mode) << ",final_loss," << fmt(median_of(losses)) << ','
        << fmt(*std::min_element(losses.begin(), losses.end())) << ','
        << fmt(*std::max_element(losses.begin(), losses.end())) << "\n";
    sum << to_string(mode) << ",final_top1," << fmt(median_of(accs)) << ','
        << fmt(*std::min_element(accs.begin(), accs.end())) << ','
        << fmt(*std::max_element(accs.begin(), accs.end())) << "\n";
  }
  return summary;
}

}  // namespace netf
