// Batch driver: single runs, convergence series, error CDFs and one-at-a-time
// parameter sweeps, written as CSV.

#include "coloc/experiment.hpp"

#include "CLI11.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace coloc;

namespace {

std::vector<double> parse_values(const std::string& csv) {
  std::vector<double> out;
  std::stringstream ss(csv);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size()) throw ParseError("--values: '" + item + "' is not a number");
    out.push_back(v);
  }
  if (out.empty()) throw ParseError("--values: empty list");
  return out;
}

void apply_scenario_flag(ExperimentConfig& config, const std::string& value) {
  const std::string prefix = "from-file:";
  if (value == "grid") {
    config.scenario.layout = Layout::grid_streets;
  } else if (value == "uniform") {
    config.scenario.layout = Layout::uniform;
  } else if (value.rfind(prefix, 0) == 0) {
    config.scenario.layout = Layout::from_file;
    config.scenario.scenario_path = value.substr(prefix.size());
    if (config.scenario.scenario_path.empty()) throw ParseError("--scenario from-file: needs a path");
  } else {
    throw ParseError("--scenario must be grid, uniform or from-file:<path>");
  }
}

std::ofstream open_output(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cooperative AoA localization with posterior-linearization belief propagation"};

  std::string config_path;
  std::uint64_t seed = 0;
  int K = 0, M = 0, seeds = 0;
  std::vector<std::string> modes;
  std::string sweep, values, scenario, out_dir = "out";

  app.add_option("--config", config_path, "JSON config (or a CSV output whose header echoes one)");
  auto* seed_opt = app.add_option("--seed", seed, "first scenario seed");
  auto* k_opt = app.add_option("--K", K, "outer linearization iterations")->check(CLI::PositiveNumber);
  auto* m_opt = app.add_option("--M", M, "BP iterations per linearization")->check(CLI::PositiveNumber);
  app.add_option("--mode", modes, "posterior or prior; repeat to compare")
      ->check(CLI::IsMember({"posterior", "prior"}));
  app.add_option("--sweep", sweep, "sweep one parameter")->check(CLI::IsMember({"r", "R", "sigma_p", "sigma_theta"}));
  app.add_option("--values", values, "comma-separated sweep values");
  auto* seeds_opt = app.add_option("--seeds", seeds, "number of consecutive seeds")->check(CLI::PositiveNumber);
  app.add_option("--out", out_dir, "output directory");
  app.add_option("--scenario", scenario, "grid | uniform | from-file:<path>");

  CLI11_PARSE(app, argc, argv);

  try {
    ExperimentConfig config;
    bool m_from_config = false;
    if (!config_path.empty()) {
      config = load_config(config_path);
      std::ifstream probe(config_path);
      std::stringstream text;
      text << probe.rdbuf();
      m_from_config = text.str().find("\"M\"") != std::string::npos;
    }
    if (*seed_opt) config.run.seed = seed;
    if (*k_opt) config.run.K = K;
    if (*m_opt) config.run.M = M;
    if (*seeds_opt) config.seeds = seeds;
    if (!modes.empty()) {
      config.modes.clear();
      for (const std::string& m : modes) config.modes.push_back(mode_from_string(m));
    }
    if (!scenario.empty()) apply_scenario_flag(config, scenario);
    if (!sweep.empty()) {
      config.sweep = sweep_parameter_from_string(sweep);
      // Sweeps default to M = 10.
      if (!*m_opt && !m_from_config) config.run.M = 10;
    }
    if (!values.empty()) config.values = parse_values(values);

    fs::create_directories(out_dir);
    {
      auto out = open_output(fs::path(out_dir) / "effective_config.json");
      out << to_json(config).dump(2) << '\n';
    }

    if (config.sweep) {
      if (config.values.empty()) throw ParseError("--sweep needs --values");
      const auto points = run_sweep(config, *config.sweep, config.values);
      auto out = open_output(fs::path(out_dir) / "sweep.csv");
      write_sweep_csv(out, config, *config.sweep, points);
      for (const SweepPoint& p : points) {
        if (!p.health.clean()) {
          std::cerr << "numeric problem: " << p.health.first_problem << '\n';
          return 3;
        }
      }
      std::cout << "wrote " << (fs::path(out_dir) / "sweep.csv").string() << '\n';
      return 0;
    }

    const std::vector<RunSummary> runs = run_batch(config);
    {
      auto out = open_output(fs::path(out_dir) / "metrics.csv");
      write_metrics_csv(out, config, runs);
    }
    {
      auto out = open_output(fs::path(out_dir) / "vehicle_errors.csv");
      write_vehicle_errors_csv(out, config, runs);
    }
    {
      auto out = open_output(fs::path(out_dir) / "cdf.csv");
      write_cdf_csv(out, config, runs);
    }
    for (const RunSummary& r : runs) {
      if (!r.health.clean()) {
        std::cerr << "numeric problem (seed " << r.seed << "): " << r.health.first_problem << '\n';
        return 3;
      }
    }
    std::cout << "wrote metrics.csv, vehicle_errors.csv, cdf.csv to " << out_dir << '\n';
    return 0;
  } catch (const ParseError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
