#include "coloc/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace coloc {

using nlohmann::json;

std::string to_string(Layout layout) {
  switch (layout) {
    case Layout::grid_streets: return "grid-streets";
    case Layout::uniform: return "uniform";
    case Layout::from_file: return "from-file";
  }
  return "unknown";
}

Layout layout_from_string(const std::string& name) {
  if (name == "grid-streets" || name == "grid") return Layout::grid_streets;
  if (name == "uniform") return Layout::uniform;
  if (name == "from-file") return Layout::from_file;
  throw ParseError("unknown layout '" + name + "'");
}

void validate(const ScenarioParams& p) {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw DomainError(std::string("scenario params: ") + what);
  };
  require(p.r > 0.0, "r must be positive");
  require(p.fov > 0.0 && p.fov <= kPi, "fov must lie in (0, pi]");
  require(p.sigma_x >= 0.0 && p.sigma_y >= 0.0 && p.sigma_theta >= 0.0,
          "prior standard deviations must be non-negative");
  require(p.R > 0.0, "R must be positive");
  require(p.n_vehicles >= 1, "n_vehicles must be positive");
  require(p.n_anchors >= 0 && p.n_anchors <= p.n_vehicles, "n_anchors must lie in [0, n_vehicles]");
  require((p.anchor_var.array() > 0.0).all(), "anchor_var must be positive");
  if (p.layout == Layout::grid_streets) {
    require(p.grid_blocks >= 1 && p.block_pitch > 0.0, "zero-area street grid");
    require(p.min_spacing > 0.0, "min_spacing must be positive");
  }
  if (p.layout == Layout::uniform) require(p.uniform_extent > 0.0, "zero-area uniform layout");
}

bool Scenario::is_anchor(VehicleId v) const {
  return std::binary_search(anchor_ids.begin(), anchor_ids.end(), v);
}

namespace {

double distance(const VehicleState& a, const VehicleState& b) { return std::hypot(a.x - b.x, a.y - b.y); }

std::string edge_name(VehicleId i, VehicleId j) {
  return "edge (" + std::to_string(i) + ", " + std::to_string(j) + ")";
}

}  // namespace

void validate(const Scenario& s) {
  validate(s.params);
  const std::size_t n = s.truth.size();
  if (s.priors.size() != n) throw DomainError("scenario: one prior per vehicle required");
  for (std::size_t v = 0; v < n; ++v) {
    const VehicleState& t = s.truth[v];
    if (!std::isfinite(t.x) || !std::isfinite(t.y) || !(t.theta > -kPi && t.theta <= kPi))
      throw DomainError("scenario: vehicle " + std::to_string(v) + " has an invalid state");
    if (s.priors[v].dim() != kStateDim)
      throw DomainError("scenario: prior " + std::to_string(v) + " is not 3-dimensional");
    validate(s.priors[v], "scenario prior " + std::to_string(v));
  }
  if (!std::is_sorted(s.anchor_ids.begin(), s.anchor_ids.end()) ||
      std::adjacent_find(s.anchor_ids.begin(), s.anchor_ids.end()) != s.anchor_ids.end())
    throw DomainError("scenario: anchor ids must be sorted and unique");
  for (VehicleId a : s.anchor_ids)
    if (a >= n) throw DomainError("scenario: anchor " + std::to_string(a) + " is not a vehicle");

  std::vector<std::pair<VehicleId, VehicleId>> seen;
  for (const ScenarioEdge& e : s.edges) {
    if (e.i >= n || e.j >= n) throw DomainError("scenario: " + edge_name(e.i, e.j) + " references an unknown vehicle");
    if (e.i >= e.j) throw DomainError("scenario: " + edge_name(e.i, e.j) + " is not in i < j order");
    seen.emplace_back(e.i, e.j);
    const double dist = distance(s.truth[e.i], s.truth[e.j]);
    if (dist > s.params.r)
      throw DomainError("scenario: " + edge_name(e.i, e.j) + " spans " + std::to_string(dist) +
                        " m, beyond r = " + std::to_string(s.params.r) + " m");
    if (!in_fov(s.truth[e.i], s.truth[e.j], s.params.fov) ||
        !in_fov(s.truth[e.j], s.truth[e.i], s.params.fov))
      throw DomainError("scenario: " + edge_name(e.i, e.j) + " is outside the field of view");
    if (auto why = psd_violation<double>(e.measurement.noise_cov))
      throw DomainError("scenario: " + edge_name(e.i, e.j) + " noise covariance: " + *why);
    if (!e.measurement.z.allFinite())
      throw DomainError("scenario: " + edge_name(e.i, e.j) + " has a non-finite measurement");
  }
  std::sort(seen.begin(), seen.end());
  if (std::adjacent_find(seen.begin(), seen.end()) != seen.end())
    throw DomainError("scenario: duplicate edge");
}

std::vector<std::pair<VehicleId, VehicleId>> build_graph(std::span<const VehicleState> truth,
                                                         double r, double fov) {
  if (!(r > 0.0)) throw DomainError("build_graph: r must be positive");
  std::vector<std::pair<VehicleId, VehicleId>> edges;
  for (VehicleId i = 0; i < truth.size(); ++i) {
    for (VehicleId j = i + 1; j < truth.size(); ++j) {
      if (distance(truth[i], truth[j]) > r) continue;
      if (in_fov(truth[i], truth[j], fov) && in_fov(truth[j], truth[i], fov)) edges.emplace_back(i, j);
    }
  }
  return edges;
}

std::vector<VehicleState> generate_layout(const ScenarioParams& p, std::mt19937_64& rng) {
  validate(p);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<VehicleState> out;
  out.reserve(std::size_t(p.n_vehicles));

  if (p.layout == Layout::uniform) {
    for (int v = 0; v < p.n_vehicles; ++v) {
      const double x = p.uniform_extent * unit(rng);
      const double y = p.uniform_extent * unit(rng);
      const double theta = wrap_angle(kPi - kTwoPi * unit(rng));
      out.push_back({x, y, theta});
    }
    return out;
  }
  if (p.layout != Layout::grid_streets) throw DomainError("generate_layout: layout has no generator");

  // Streets run along x = k * pitch and y = k * pitch, k = 0..blocks. Each
  // street has two lanes, one per travel direction, offset from the center line.
  const int lines = p.grid_blocks + 1;
  const double length = p.grid_blocks * p.block_pitch;
  std::normal_distribution<double> jitter(0.0, p.heading_jitter);
  std::uniform_int_distribution<int> pick_street(0, 2 * lines - 1);
  const int max_attempts = 1000 * p.n_vehicles;
  int attempts = 0;
  while (int(out.size()) < p.n_vehicles) {
    if (++attempts > max_attempts)
      throw DomainError("generate_layout: street grid too small for the requested vehicles");
    const int street = pick_street(rng);
    const bool horizontal = street < lines;
    const double line = (street % lines) * p.block_pitch;
    const double along = length * unit(rng);
    const bool forward = unit(rng) < 0.5;
    const double offset = forward ? -p.lane_offset : p.lane_offset;
    const double heading_noise = jitter(rng);
    VehicleState s;
    if (horizontal) {
      s = {along, line + offset, wrap_angle((forward ? 0.0 : kPi) + heading_noise)};
    } else {
      s = {line - offset, along, wrap_angle((forward ? 0.5 * kPi : -0.5 * kPi) + heading_noise)};
    }
    const bool crowded = std::any_of(out.begin(), out.end(),
                                     [&](const VehicleState& o) { return distance(o, s) < p.min_spacing; });
    if (!crowded) out.push_back(s);
  }
  return out;
}

std::vector<VehicleId> spread_anchors(std::span<const VehicleState> truth, int count) {
  if (count < 0 || std::size_t(count) > truth.size())
    throw DomainError("spread_anchors: anchor count out of range");
  std::vector<VehicleId> chosen;
  if (count == 0) return chosen;
  double cx = 0.0, cy = 0.0;
  for (const VehicleState& s : truth) {
    cx += s.x;
    cy += s.y;
  }
  cx /= double(truth.size());
  cy /= double(truth.size());

  std::vector<double> nearest(truth.size());
  for (std::size_t v = 0; v < truth.size(); ++v) nearest[v] = std::hypot(truth[v].x - cx, truth[v].y - cy);
  while (int(chosen.size()) < count) {
    VehicleId best = 0;
    double best_d = -1.0;
    for (VehicleId v = 0; v < truth.size(); ++v) {
      if (nearest[v] > best_d) {
        best_d = nearest[v];
        best = v;
      }
    }
    chosen.push_back(best);
    for (VehicleId v = 0; v < truth.size(); ++v) nearest[v] = std::min(nearest[v], distance(truth[v], truth[best]));
    nearest[best] = -1.0;
  }
  std::sort(chosen.begin(), chosen.end());
  return chosen;
}

Scenario generate_scenario(const ScenarioParams& params, std::mt19937_64& rng) {
  validate(params);
  if (params.layout == Layout::from_file) {
    Scenario s = load_scenario(params.scenario_path);
    return s;
  }
  Scenario s;
  s.params = params;
  s.truth = generate_layout(params, rng);
  s.anchor_ids = spread_anchors(s.truth, params.n_anchors);

  const Vector3d prior_var(params.sigma_x * params.sigma_x, params.sigma_y * params.sigma_y,
                           params.sigma_theta * params.sigma_theta);
  std::normal_distribution<double> normal(0.0, 1.0);
  for (VehicleId v = 0; v < s.truth.size(); ++v) {
    const Vector3d t = s.truth[v].vector();
    if (s.is_anchor(v)) {
      s.priors.emplace_back(t, params.anchor_var.asDiagonal().toDenseMatrix());
      continue;
    }
    Vector3d offset;
    for (Index k = 0; k < 3; ++k) offset(k) = normal(rng) * std::sqrt(prior_var(k));
    Vector3d mean = t + offset;
    mean(2) = wrap_angle(mean(2));
    s.priors.emplace_back(mean, prior_var.asDiagonal().toDenseMatrix());
  }

  const Matrix2d noise = params.R * Matrix2d::Identity();
  for (const auto& [i, j] : build_graph(s.truth, params.r, params.fov))
    s.edges.push_back({i, j, simulate_measurement(s.truth[i], s.truth[j], noise, rng)});
  return s;
}

FactorGraph make_factor_graph(const Scenario& scenario) {
  FactorGraph graph;
  for (const Gaussiand& prior : scenario.priors) graph.add_vehicle(prior);
  for (const ScenarioEdge& e : scenario.edges) graph.add_edge(e.i, e.j, Observation(e.measurement));
  return graph;
}

// ---------------------------------------------------------------------------
// JSON

namespace {

const json& field(const json& j, const std::string& key, const std::string& where) {
  if (!j.is_object()) throw ParseError(where + ": expected an object");
  auto it = j.find(key);
  if (it == j.end()) throw ParseError("missing required field '" + where + "." + key + "'");
  return *it;
}

double number(const json& j, const std::string& where) {
  if (!j.is_number()) throw ParseError("field '" + where + "' must be a number");
  return j.get<double>();
}

VehicleId index_value(const json& j, const std::string& where) {
  if (!j.is_number_integer() || j.get<long long>() < 0)
    throw ParseError("field '" + where + "' must be a non-negative integer");
  return VehicleId(j.get<long long>());
}

VectorXd vector_value(const json& j, Index size, const std::string& where) {
  if (!j.is_array() || Index(j.size()) != size)
    throw ParseError("field '" + where + "' must be an array of " + std::to_string(size) + " numbers");
  VectorXd v(size);
  for (Index k = 0; k < size; ++k) v(k) = number(j[std::size_t(k)], where + "[" + std::to_string(k) + "]");
  return v;
}

MatrixXd matrix_value(const json& j, Index size, const std::string& where) {
  if (!j.is_array() || Index(j.size()) != size)
    throw ParseError("field '" + where + "' must be a " + std::to_string(size) + "x" +
                     std::to_string(size) + " array");
  MatrixXd m(size, size);
  for (Index r = 0; r < size; ++r) {
    const VectorXd row = vector_value(j[std::size_t(r)], size, where + "[" + std::to_string(r) + "]");
    m.row(r) = row.transpose();
  }
  return m;
}

json to_array(const VectorXd& v) {
  json a = json::array();
  for (Index k = 0; k < v.size(); ++k) a.push_back(v(k));
  return a;
}

json to_array(const MatrixXd& m) {
  json a = json::array();
  for (Index r = 0; r < m.rows(); ++r) a.push_back(to_array(VectorXd(m.row(r).transpose())));
  return a;
}

}  // namespace

json to_json(const ScenarioParams& p) {
  return json{{"r", p.r},
              {"fov", p.fov},
              {"sigma_x", p.sigma_x},
              {"sigma_y", p.sigma_y},
              {"sigma_theta", p.sigma_theta},
              {"R", p.R},
              {"n_vehicles", p.n_vehicles},
              {"n_anchors", p.n_anchors},
              {"anchor_var", to_array(VectorXd(p.anchor_var))},
              {"layout", to_string(p.layout)},
              {"grid_blocks", p.grid_blocks},
              {"block_pitch", p.block_pitch},
              {"lane_offset", p.lane_offset},
              {"heading_jitter", p.heading_jitter},
              {"min_spacing", p.min_spacing},
              {"uniform_extent", p.uniform_extent},
              {"scenario_path", p.scenario_path}};
}

ScenarioParams params_from_json(const json& j, ScenarioParams p) {
  if (!j.is_object()) throw ParseError("params: expected an object");
  auto num = [&](const char* key, double& out) {
    if (j.contains(key)) out = number(j.at(key), std::string("params.") + key);
  };
  auto integer = [&](const char* key, int& out) {
    if (!j.contains(key)) return;
    if (!j.at(key).is_number_integer()) throw ParseError(std::string("field 'params.") + key + "' must be an integer");
    out = j.at(key).get<int>();
  };
  num("r", p.r);
  num("fov", p.fov);
  num("sigma_x", p.sigma_x);
  num("sigma_y", p.sigma_y);
  num("sigma_theta", p.sigma_theta);
  num("R", p.R);
  integer("n_vehicles", p.n_vehicles);
  integer("n_anchors", p.n_anchors);
  if (j.contains("anchor_var")) p.anchor_var = vector_value(j.at("anchor_var"), 3, "params.anchor_var");
  if (j.contains("layout")) {
    if (!j.at("layout").is_string()) throw ParseError("field 'params.layout' must be a string");
    p.layout = layout_from_string(j.at("layout").get<std::string>());
  }
  integer("grid_blocks", p.grid_blocks);
  num("block_pitch", p.block_pitch);
  num("lane_offset", p.lane_offset);
  num("heading_jitter", p.heading_jitter);
  num("min_spacing", p.min_spacing);
  num("uniform_extent", p.uniform_extent);
  if (j.contains("scenario_path")) {
    if (!j.at("scenario_path").is_string()) throw ParseError("field 'params.scenario_path' must be a string");
    p.scenario_path = j.at("scenario_path").get<std::string>();
  }
  return p;
}

json to_json(const Scenario& s) {
  json vehicles = json::array();
  json priors = json::array();
  for (VehicleId v = 0; v < s.truth.size(); ++v) {
    vehicles.push_back({{"id", v}, {"x", s.truth[v].x}, {"y", s.truth[v].y}, {"theta", s.truth[v].theta}});
    priors.push_back({{"id", v}, {"mean", to_array(s.priors[v].mean)}, {"cov", to_array(s.priors[v].cov)}});
  }
  json edges = json::array();
  for (const ScenarioEdge& e : s.edges)
    edges.push_back({{"i", e.i},
                     {"j", e.j},
                     {"z", to_array(VectorXd(e.measurement.z))},
                     {"R", to_array(MatrixXd(e.measurement.noise_cov))}});
  return json{{"params", to_json(s.params)},
              {"vehicles", vehicles},
              {"priors", priors},
              {"anchors", s.anchor_ids},
              {"edges", edges}};
}

Scenario scenario_from_json(const json& j) {
  Scenario s;
  s.params = params_from_json(field(j, "params", "scenario"));

  const json& vehicles = field(j, "vehicles", "scenario");
  if (!vehicles.is_array()) throw ParseError("field 'vehicles' must be an array");
  s.truth.resize(vehicles.size());
  std::vector<bool> have(vehicles.size(), false);
  for (std::size_t k = 0; k < vehicles.size(); ++k) {
    const std::string where = "vehicles[" + std::to_string(k) + "]";
    const json& v = vehicles[k];
    const VehicleId id = index_value(field(v, "id", where), where + ".id");
    if (id >= vehicles.size() || have[id])
      throw ParseError(where + ": vehicle ids must be unique and in [0, " + std::to_string(vehicles.size()) + ")");
    have[id] = true;
    s.truth[id] = {number(field(v, "x", where), where + ".x"), number(field(v, "y", where), where + ".y"),
                   number(field(v, "theta", where), where + ".theta")};
  }

  const json& priors = field(j, "priors", "scenario");
  if (!priors.is_array() || priors.size() != vehicles.size())
    throw ParseError("field 'priors' must hold one entry per vehicle");
  s.priors.resize(priors.size());
  std::fill(have.begin(), have.end(), false);
  for (std::size_t k = 0; k < priors.size(); ++k) {
    const std::string where = "priors[" + std::to_string(k) + "]";
    const json& p = priors[k];
    const VehicleId id = index_value(field(p, "id", where), where + ".id");
    if (id >= priors.size() || have[id]) throw ParseError(where + ": prior ids must match vehicle ids");
    have[id] = true;
    s.priors[id] = Gaussiand(vector_value(field(p, "mean", where), 3, where + ".mean"),
                             matrix_value(field(p, "cov", where), 3, where + ".cov"));
  }

  const json& anchors = field(j, "anchors", "scenario");
  if (!anchors.is_array()) throw ParseError("field 'anchors' must be an array");
  for (std::size_t k = 0; k < anchors.size(); ++k)
    s.anchor_ids.push_back(index_value(anchors[k], "anchors[" + std::to_string(k) + "]"));

  const json& edges = field(j, "edges", "scenario");
  if (!edges.is_array()) throw ParseError("field 'edges' must be an array");
  for (std::size_t k = 0; k < edges.size(); ++k) {
    const std::string where = "edges[" + std::to_string(k) + "]";
    const json& e = edges[k];
    ScenarioEdge edge;
    edge.i = index_value(field(e, "i", where), where + ".i");
    edge.j = index_value(field(e, "j", where), where + ".j");
    edge.measurement.z = vector_value(field(e, "z", where), 2, where + ".z");
    edge.measurement.noise_cov = matrix_value(field(e, "R", where), 2, where + ".R");
    s.edges.push_back(edge);
  }

  validate(s);
  return s;
}

void save_scenario(const Scenario& scenario, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out << to_json(scenario).dump(2) << '\n';
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open scenario file '" + path.string() + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError("scenario file '" + path.string() + "': " + e.what());
  }
  return scenario_from_json(j);
}

}  // namespace coloc
