#include "doctest.h"
#include "netf/experiment.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

using namespace netf;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& leaf) {
  fs::path p = fs::temp_directory_path() / leaf;
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  REQUIRE(in.good());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ExperimentConfig smoke_config(const fs::path& out) {
  ExperimentConfig cfg;
  cfg.name = "smoke";
  cfg.d = 12;
  cfg.C = 3;
  cfg.N = 18;
  cfg.seeds = {1};
  cfg.train.iterations = 10;
  cfg.train.log_interval = 2;
  cfg.train.learning_rate = 1.0;
  cfg.output_dir = out;
  return cfg;
}

}  // namespace

TEST_CASE("smoke run produces schema-valid CSVs and a summary") {
  fs::path out = temp_dir("netf_exp_smoke");
  ExperimentSummary summary = run_experiment(smoke_config(out));
  CHECK(summary.failures == 0);
  CHECK(summary.runs.size() == 3);  // 3 modes x 1 seed

  int csvs = 0;
  for (const auto& r : summary.runs) {
    CHECK(r.ok);
    std::string body = slurp(r.csv_path);
    ++csvs;
    std::stringstream ss(body);
    std::string header;
    std::getline(ss, header);
    CHECK(header == kMetricsHeader);
    std::string row;
    int rows = 0;
    while (std::getline(ss, row)) {
      int commas = 0;
      for (char ch : row) commas += ch == ',';
      CHECK(commas == 12);  // 13 columns
      ++rows;
    }
    CHECK(rows >= 2);
    CHECK(fs::exists(out / (r.run_id + "_timing.csv")));
    CHECK(fs::exists(out / (r.run_id + "_margins.csv")));
  }
  CHECK(csvs == 3);
  CHECK(fs::exists(out / "smoke_summary.csv"));
}

TEST_CASE("identical configs produce byte-identical traces") {
  fs::path a = temp_dir("netf_exp_det_a");
  fs::path b = temp_dir("netf_exp_det_b");
  run_experiment(smoke_config(a));
  run_experiment(smoke_config(b));
  for (const char* leaf :
       {"smoke_standard_seed1.csv", "smoke_fixed_etf_seed1.csv", "smoke_implicit_etf_seed1.csv",
        "smoke_standard_seed1_margins.csv"})
    CHECK(slurp(a / leaf) == slurp(b / leaf));
}

TEST_CASE("config parsing, presets, and environment override") {
  fs::path dir = temp_dir("netf_exp_cfg");
  {
    std::ofstream out(dir / "cfg.json");
    out << R"({"name":"t","preset":"ufm10","seeds":[3],"iterations":7,)"
        << R"("modes":["fixed_etf"],"output_dir":")" << (dir / "runs").string() << R"("})";
  }
  ExperimentConfig cfg = ExperimentConfig::from_json_file(dir / "cfg.json");
  cfg.resolve();
  CHECK(cfg.d == 512);
  CHECK(cfg.C == 10);
  CHECK(cfg.N == 1000);
  CHECK(cfg.train.iterations == 7);
  CHECK(cfg.seeds == std::vector<std::uint64_t>{3});
  CHECK(cfg.modes.size() == 1);

  setenv("NETF_OUTPUT_DIR", (dir / "override").c_str(), 1);
  ExperimentConfig cfg2 = ExperimentConfig::from_json_file(dir / "cfg.json");
  cfg2.resolve();
  unsetenv("NETF_OUTPUT_DIR");
  CHECK(cfg2.output_dir == dir / "override");

  CHECK_THROWS(ExperimentConfig::from_json_file(dir / "missing.json"));
  {
    std::ofstream out(dir / "bad.json");
    out << R"({"preset":"nope"})";
  }
  ExperimentConfig bad = ExperimentConfig::from_json_file(dir / "bad.json");
  CHECK_THROWS(bad.resolve());
}

TEST_CASE("plot emission") {
  fs::path out = temp_dir("netf_exp_plot");
  ExperimentSummary summary = run_experiment(smoke_config(out));
  std::vector<fs::path> csvs;
  for (const auto& r : summary.runs) csvs.push_back(r.csv_path);

  fs::path plots = out / "plots";
  CHECK(emit_plots(csvs, {}, plots) == 0);

  int n = emit_plots(csvs, {"loss", "cosine_margin", "margin_distribution", "nc1", "nc3", "equinorm"},
                     plots);
  CHECK(n == 6);
  for (const char* leaf : {"loss.svg", "cosine_margin.svg", "margin_distribution.svg", "nc1.svg",
                           "nc3.svg", "equinorm.svg"}) {
    CHECK(fs::exists(plots / leaf));
    CHECK(fs::file_size(plots / leaf) > 200);
  }

  CHECK_THROWS(emit_plots(csvs, {"not_a_panel"}, plots));
  // missing column -> schema error naming the column
  fs::path broken = out / "broken.csv";
  {
    std::ofstream o(broken);
    o << "run_id,mode\nx,standard\n";
  }
  try {
    emit_plots({broken}, {"loss"}, plots);
    CHECK(false);
  } catch (const std::exception& e) {
    CHECK(std::string(e.what()).find("missing column") != std::string::npos);
  }
}
