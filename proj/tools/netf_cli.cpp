#include <fnmatch.h>

#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "netf/experiment.hpp"
#include "netf/validate.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfigError = 1;
constexpr int kExitRunFailure = 2;
constexpr int kExitValidationFailure = 3;

// Expands shell-style glob patterns that survived shell quoting.
std::vector<fs::path> expand_globs(const std::vector<std::string>& patterns) {
  std::vector<fs::path> out;
  for (const auto& pat : patterns) {
    if (pat.find_first_of("*?[") == std::string::npos) {
      out.emplace_back(pat);
      continue;
    }
    fs::path p(pat);
    fs::path dir = p.parent_path().empty() ? fs::path(".") : p.parent_path();
    std::string leaf = p.filename().string();
    std::vector<fs::path> matched;
    if (fs::is_directory(dir))
      for (const auto& entry : fs::directory_iterator(dir))
        if (fnmatch(leaf.c_str(), entry.path().filename().c_str(), 0) == 0)
          matched.push_back(entry.path());
    std::sort(matched.begin(), matched.end());
    out.insert(out.end(), matched.begin(), matched.end());
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nearest simplex-ETF guided training for unconstrained feature models"};
  app.require_subcommand(1);

  std::string config_path;
  std::int64_t seed_override = -1;
  auto* run = app.add_subcommand("run", "Run an experiment from a JSON config");
  run->add_option("config", config_path, "Path to the experiment config (JSON)")->required();
  run->add_option("--seed", seed_override, "Run only this seed, overriding the config list");

  std::vector<std::string> csv_args;
  std::vector<std::string> panels = {"loss",   "cosine_margin", "margin_distribution",
                                     "nc1",    "nc3",           "equinorm"};
  std::string plot_out = "plots";
  auto* plot = app.add_subcommand("plot", "Render SVG panels from run CSVs");
  plot->add_option("csvs", csv_args, "Run CSV files or glob patterns")->required();
  plot->add_option("--panels", panels, "Panel names")->delimiter(',');
  plot->add_option("--out", plot_out, "Output directory");

  auto* validate = app.add_subcommand("validate", "Run the numerical oracle battery");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      netf::ExperimentConfig config;
      try {
        config = netf::ExperimentConfig::from_json_file(config_path);
        if (seed_override >= 0)
          config.seeds = {static_cast<std::uint64_t>(seed_override)};
        config.resolve();
      } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfigError;
      }
      netf::ExperimentSummary summary = netf::run_experiment(config);
      for (const auto& r : summary.runs) {
        if (r.ok)
          std::cout << r.run_id << ": final loss " << r.final_loss << ", top-1 " << r.final_top1
                    << "\n";
        else
          std::cerr << r.run_id << ": FAILED (" << r.error << ")\n";
      }
      return summary.failures == 0 ? kExitOk : kExitRunFailure;
    }
    if (plot->parsed()) {
      std::vector<fs::path> csvs = expand_globs(csv_args);
      if (csvs.empty()) {
        std::cerr << "config error: no CSV files matched\n";
        return kExitConfigError;
      }
      int n = netf::emit_plots(csvs, panels, plot_out);
      std::cout << "wrote " << n << " panel(s) to " << plot_out << "\n";
      return kExitOk;
    }
    if (validate->parsed()) {
      netf::ValidationReport report = netf::validate_suite(std::cout);
      return report.all_passed() ? kExitOk : kExitValidationFailure;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRunFailure;
  }
  return kExitOk;
}
