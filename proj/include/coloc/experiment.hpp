#pragma once

#include "coloc/bp.hpp"
#include "coloc/plbp.hpp"
#include "coloc/scenario.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace coloc {

enum class SweepParameter { r, R, sigma_p, sigma_theta };

std::string to_string(SweepParameter p);
SweepParameter sweep_parameter_from_string(const std::string& name);

/// Everything a batch run needs. Serialized as one flat JSON object whose
/// keys are the scenario parameters plus the run settings below.
struct ExperimentConfig {
  ScenarioParams scenario;
  RunConfig run;  // run.seed is the first seed
  std::vector<LinearizationMode> modes{LinearizationMode::posterior};
  int seeds = 1;
  bool include_anchors = false;
  std::optional<SweepParameter> sweep;
  std::vector<double> values;
};

nlohmann::json to_json(const ExperimentConfig& config);
/// Overrides fields of `base` present in `j`.
ExperimentConfig config_from_json(const nlohmann::json& j, ExperimentConfig base = {});
/// Reads a JSON config. A file whose first line starts with '#' is read as the
/// '#'-prefixed header block of one of our CSV outputs.
ExperimentConfig load_config(const std::filesystem::path& path);

struct IterationMetrics {
  int k = 0;
  double pos_rmse = 0.0;
  double dir_rmse = 0.0;
};

/// Metrics of one PLBP run on one scenario draw.
struct RunSummary {
  std::uint64_t seed = 0;
  LinearizationMode mode = LinearizationMode::posterior;
  int M = 0;
  double initial_pos_rmse = 0.0;
  double initial_dir_rmse = 0.0;
  std::vector<IterationMetrics> iterations;  // k = 1..K
  std::vector<VehicleId> ids;                // vehicles scored in the error vectors
  std::vector<bool> anchor;                  // per vehicle of the scenario
  std::vector<double> pos_errors;            // final, per scored vehicle
  std::vector<double> dir_errors;
  std::size_t edge_count = 0;
  NumericHealth health;
  double seconds = 0.0;  // wall time of scenario generation plus PLBP; not written to CSV

  double final_pos_rmse() const { return iterations.back().pos_rmse; }
  double final_dir_rmse() const { return iterations.back().dir_rmse; }
};

Scenario make_scenario(const ScenarioParams& params, std::uint64_t seed);

RunSummary summarize_run(const Scenario& scenario, const RunConfig& run, bool include_anchors);

/// Generates the scenario for `seed` and runs PLBP on it.
RunSummary run_seed(const ExperimentConfig& config, std::uint64_t seed, LinearizationMode mode);

/// Runs `tasks` jobs on up to hardware_concurrency worker threads.
void parallel_for(std::size_t tasks, const std::function<void(std::size_t)>& job);

/// One (seed, mode) summary per seed in [config.run.seed, +config.seeds) and
/// per mode, ordered by mode then seed.
std::vector<RunSummary> run_batch(const ExperimentConfig& config);

ScenarioParams with_sweep_value(ScenarioParams params, SweepParameter p, double value);

struct SweepPoint {
  double value = 0.0;
  int seeds = 0;
  double pos_mean = 0.0;
  double pos_stderr = 0.0;
  double dir_mean = 0.0;
  double dir_stderr = 0.0;
  std::vector<double> pos_rmse;  // per seed
  std::vector<double> dir_rmse;
  std::vector<double> seconds;  // per seed
  NumericHealth health;
};

/// Changes one parameter at a time, keeping the others at `config.scenario`,
/// and runs config.run (posterior mode) for every value and seed.
std::vector<SweepPoint> run_sweep(const ExperimentConfig& config, SweepParameter p,
                                  std::span<const double> values);

double mean(std::span<const double> xs);
double standard_error(std::span<const double> xs);

// CSV outputs. Each starts with a '#'-prefixed block echoing the effective
// config; that block is itself a loadable config.
std::string header_block(const ExperimentConfig& config);
void write_metrics_csv(std::ostream& out, const ExperimentConfig& config, std::span<const RunSummary> runs);
void write_vehicle_errors_csv(std::ostream& out, const ExperimentConfig& config,
                              std::span<const RunSummary> runs);
void write_cdf_csv(std::ostream& out, const ExperimentConfig& config, std::span<const RunSummary> runs);
void write_sweep_csv(std::ostream& out, const ExperimentConfig& config, SweepParameter p,
                     std::span<const SweepPoint> points);

}  // namespace coloc
