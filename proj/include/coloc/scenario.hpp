#pragma once

#include "coloc/bp.hpp"
#include "coloc/core.hpp"
#include "coloc/gaussian.hpp"
#include "coloc/geometry.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <random>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace coloc {

enum class Layout { grid_streets, uniform, from_file };

std::string to_string(Layout layout);
Layout layout_from_string(const std::string& name);

/// Scenario parameters. Defaults are the benchmark values: r = 30 m,
/// fov = pi, sigma_x = sigma_y = 5 m, sigma_theta = 0.35 rad, R = 0.10 rad^2,
/// 51 vehicles of which 6 are anchors with prior variance 0.01.
struct ScenarioParams {
  double r = 30.0;
  double fov = kPi;
  double sigma_x = 5.0;
  double sigma_y = 5.0;
  double sigma_theta = 0.35;
  double R = 0.10;
  int n_vehicles = 51;
  int n_anchors = 6;
  Vector3d anchor_var{0.01, 0.01, 0.01};
  Layout layout = Layout::grid_streets;

  // grid-streets layout. 2 x 2 blocks at 24 m puts about 25 neighbours in
  // range of a typical vehicle.
  int grid_blocks = 2;
  double block_pitch = 24.0;
  double lane_offset = 1.75;
  double heading_jitter = 0.05;
  double min_spacing = 4.0;

  // uniform layout: square side in meters
  double uniform_extent = 80.0;

  // from-file layout
  std::string scenario_path;

  bool operator==(const ScenarioParams&) const = default;
};

void validate(const ScenarioParams& params);

struct ScenarioEdge {
  VehicleId i = 0;
  VehicleId j = 0;
  AoAPair measurement;

  bool operator==(const ScenarioEdge&) const = default;
};

/// A static snapshot: true states, Gaussian priors, anchors and one AoA
/// measurement per edge (i < j).
struct Scenario {
  std::vector<VehicleState> truth;
  std::vector<Gaussiand> priors;
  std::vector<VehicleId> anchor_ids;  // sorted
  std::vector<ScenarioEdge> edges;
  ScenarioParams params;

  std::size_t size() const { return truth.size(); }
  bool is_anchor(VehicleId v) const;
  bool operator==(const Scenario&) const = default;
};

/// Checks the scenario invariants; throws DomainError naming the offender.
void validate(const Scenario& scenario);

/// Unordered pairs (i < j) within radius r that see each other through
/// their arrays.
std::vector<std::pair<VehicleId, VehicleId>> build_graph(std::span<const VehicleState> truth,
                                                         double r, double fov);

/// Vehicle placement for the grid-streets and uniform layouts.
std::vector<VehicleState> generate_layout(const ScenarioParams& params, std::mt19937_64& rng);

/// Farthest-point selection of `count` vehicles, starting from the one
/// farthest from the centroid.
std::vector<VehicleId> spread_anchors(std::span<const VehicleState> truth, int count);

/// Full scenario draw: layout, anchors, priors, graph, then measurements,
/// in that rng order.
Scenario generate_scenario(const ScenarioParams& params, std::mt19937_64& rng);

/// Priors and measurement edges of `scenario` as a factor graph (no linear
/// models yet).
FactorGraph make_factor_graph(const Scenario& scenario);

nlohmann::json to_json(const ScenarioParams& params);
/// Overrides the fields of `base` present in `j`; unknown keys are ignored.
ScenarioParams params_from_json(const nlohmann::json& j, ScenarioParams base = {});

nlohmann::json to_json(const Scenario& scenario);
Scenario scenario_from_json(const nlohmann::json& j);

void save_scenario(const Scenario& scenario, const std::filesystem::path& path);
Scenario load_scenario(const std::filesystem::path& path);

}  // namespace coloc
