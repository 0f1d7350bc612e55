#include "coloc/experiment.hpp"

#include "coloc/metrics.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

namespace coloc {

using nlohmann::json;

std::string to_string(SweepParameter p) {
  switch (p) {
    case SweepParameter::r: return "r";
    case SweepParameter::R: return "R";
    case SweepParameter::sigma_p: return "sigma_p";
    case SweepParameter::sigma_theta: return "sigma_theta";
  }
  return "unknown";
}

SweepParameter sweep_parameter_from_string(const std::string& name) {
  if (name == "r") return SweepParameter::r;
  if (name == "R") return SweepParameter::R;
  if (name == "sigma_p") return SweepParameter::sigma_p;
  if (name == "sigma_theta") return SweepParameter::sigma_theta;
  throw ParseError("unknown sweep parameter '" + name + "' (expected r, R, sigma_p or sigma_theta)");
}

// ---------------------------------------------------------------------------
// config

json to_json(const ExperimentConfig& c) {
  json j = to_json(c.scenario);
  j["K"] = c.run.K;
  j["M"] = c.run.M;
  json modes = json::array();
  for (LinearizationMode m : c.modes) modes.push_back(to_string(m));
  j["mode"] = modes;
  j["seed"] = c.run.seed;
  j["seeds"] = c.seeds;
  j["message_form"] = c.run.bp.form == MessageForm::vector ? "vector" : "scalar";
  j["include_anchors"] = c.include_anchors;
  j["sweep"] = c.sweep ? json(to_string(*c.sweep)) : json(nullptr);
  j["values"] = c.values;
  return j;
}

ExperimentConfig config_from_json(const json& j, ExperimentConfig c) {
  if (!j.is_object()) throw ParseError("config: expected a JSON object");
  c.scenario = params_from_json(j, c.scenario);
  auto integer = [&](const char* key, int& out) {
    if (!j.contains(key)) return;
    if (!j.at(key).is_number_integer()) throw ParseError(std::string("config field '") + key + "' must be an integer");
    out = j.at(key).get<int>();
  };
  integer("K", c.run.K);
  integer("M", c.run.M);
  integer("seeds", c.seeds);
  if (j.contains("seed")) {
    if (!j.at("seed").is_number_unsigned()) throw ParseError("config field 'seed' must be a non-negative integer");
    c.run.seed = j.at("seed").get<std::uint64_t>();
  }
  if (j.contains("mode")) {
    const json& m = j.at("mode");
    c.modes.clear();
    if (m.is_string()) {
      c.modes.push_back(mode_from_string(m.get<std::string>()));
    } else if (m.is_array()) {
      for (const json& e : m) {
        if (!e.is_string()) throw ParseError("config field 'mode' must hold strings");
        c.modes.push_back(mode_from_string(e.get<std::string>()));
      }
    } else {
      throw ParseError("config field 'mode' must be a string or an array of strings");
    }
    if (c.modes.empty()) throw ParseError("config field 'mode' is empty");
  }
  if (j.contains("message_form")) {
    const std::string f = j.at("message_form").get<std::string>();
    if (f == "vector") c.run.bp.form = MessageForm::vector;
    else if (f == "scalar") c.run.bp.form = MessageForm::scalar;
    else throw ParseError("config field 'message_form' must be 'vector' or 'scalar'");
  }
  if (j.contains("include_anchors")) {
    if (!j.at("include_anchors").is_boolean()) throw ParseError("config field 'include_anchors' must be a boolean");
    c.include_anchors = j.at("include_anchors").get<bool>();
  }
  if (j.contains("sweep")) {
    const json& s = j.at("sweep");
    if (s.is_null()) c.sweep.reset();
    else if (s.is_string()) c.sweep = sweep_parameter_from_string(s.get<std::string>());
    else throw ParseError("config field 'sweep' must be a string or null");
  }
  if (j.contains("values")) {
    if (!j.at("values").is_array()) throw ParseError("config field 'values' must be an array");
    c.values.clear();
    for (const json& v : j.at("values")) {
      if (!v.is_number()) throw ParseError("config field 'values' must hold numbers");
      c.values.push_back(v.get<double>());
    }
  }
  if (c.run.K < 1 || c.run.M < 1) throw ParseError("config: K and M must be at least 1");
  if (c.seeds < 1) throw ParseError("config: seeds must be at least 1");
  return c;
}

static constexpr const char* kConfigBegin = "# config-begin";
static constexpr const char* kConfigEnd = "# config-end";

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config file '" + path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  std::string text = buffer.str();

  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string::npos && text[first] == '#') {
    std::istringstream lines(text);
    std::string line, body;
    bool inside = false;
    while (std::getline(lines, line)) {
      if (line.rfind(kConfigBegin, 0) == 0) { inside = true; continue; }
      if (line.rfind(kConfigEnd, 0) == 0) break;
      if (inside && !line.empty() && line[0] == '#') body += line.substr(line.size() > 1 && line[1] == ' ' ? 2 : 1) + "\n";
    }
    if (body.empty()) throw ParseError("config file '" + path.string() + "' has no '# config-begin' block");
    text = body;
  }
  try {
    return config_from_json(json::parse(text));
  } catch (const json::exception& e) {
    throw ParseError("config file '" + path.string() + "': " + e.what());
  }
}

// ---------------------------------------------------------------------------
// runs

Scenario make_scenario(const ScenarioParams& params, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return generate_scenario(params, rng);
}

RunSummary summarize_run(const Scenario& scenario, const RunConfig& run, bool include_anchors) {
  const std::vector<VehicleId> excluded = include_anchors ? std::vector<VehicleId>{} : scenario.anchor_ids;
  RunSummary s;
  s.seed = run.seed;
  s.mode = run.mode;
  s.M = run.M;
  s.edge_count = scenario.edges.size();
  s.initial_pos_rmse = position_rmse(scenario.priors, scenario.truth, excluded);
  s.initial_dir_rmse = direction_rmse(scenario.priors, scenario.truth, excluded);

  RunConfig cfg = run;
  cfg.record_history = false;
  const RunResult result = run_plbp(scenario, cfg, [&](int k, const std::vector<Gaussiand>& beliefs) {
    IterationMetrics m{k, position_rmse(beliefs, scenario.truth, excluded),
                       direction_rmse(beliefs, scenario.truth, excluded)};
    s.iterations.push_back(m);
  });
  s.health = result.health;
  for (const IterationMetrics& m : s.iterations) {
    s.health.check_value(m.pos_rmse, "position RMSE");
    s.health.check_value(m.dir_rmse, "direction RMSE");
  }

  for (VehicleId v = 0; v < scenario.size(); ++v) {
    s.anchor.push_back(scenario.is_anchor(v));
    if (!include_anchors && scenario.is_anchor(v)) continue;
    s.ids.push_back(v);
  }
  s.pos_errors = position_errors(result.beliefs, scenario.truth, excluded);
  s.dir_errors = direction_errors(result.beliefs, scenario.truth, excluded);
  return s;
}

RunSummary run_seed(const ExperimentConfig& config, std::uint64_t seed, LinearizationMode mode) {
  const auto start = std::chrono::steady_clock::now();
  const Scenario scenario = make_scenario(config.scenario, seed);
  RunConfig run = config.run;
  run.seed = seed;
  run.mode = mode;
  RunSummary out = summarize_run(scenario, run, config.include_anchors);
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

void parallel_for(std::size_t tasks, const std::function<void(std::size_t)>& job) {
  const std::size_t workers =
      std::max<std::size_t>(1, std::min<std::size_t>(tasks, std::thread::hardware_concurrency()));
  if (workers <= 1) {
    for (std::size_t t = 0; t < tasks; ++t) job(t);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (std::size_t t = next++; t < tasks; t = next++) {
        try {
          job(t);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (std::thread& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

std::vector<RunSummary> run_batch(const ExperimentConfig& config) {
  const std::size_t n_seeds = std::size_t(config.seeds);
  std::vector<RunSummary> out(config.modes.size() * n_seeds);
  parallel_for(out.size(), [&](std::size_t t) {
    const LinearizationMode mode = config.modes[t / n_seeds];
    out[t] = run_seed(config, config.run.seed + t % n_seeds, mode);
  });
  return out;
}

ScenarioParams with_sweep_value(ScenarioParams p, SweepParameter which, double value) {
  if (!(value >= 0.0) || !std::isfinite(value)) throw DomainError("sweep values must be finite and non-negative");
  switch (which) {
    case SweepParameter::r: p.r = value; break;
    case SweepParameter::R: p.R = value; break;
    case SweepParameter::sigma_p:
      // sigma_p = sqrt(sigma_x^2 + sigma_y^2), split evenly.
      p.sigma_x = value / std::sqrt(2.0);
      p.sigma_y = value / std::sqrt(2.0);
      break;
    case SweepParameter::sigma_theta: p.sigma_theta = value; break;
  }
  validate(p);
  return p;
}

double mean(std::span<const double> xs) {
  if (xs.empty()) throw DomainError("mean of an empty sample");
  double s = 0.0;
  for (double x : xs) s += x;
  return s / double(xs.size());
}

double standard_error(std::span<const double> xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / double(xs.size() - 1) / double(xs.size()));
}

std::vector<SweepPoint> run_sweep(const ExperimentConfig& config, SweepParameter which,
                                  std::span<const double> values) {
  if (values.empty()) throw DomainError("run_sweep: no values");
  const std::size_t n_seeds = std::size_t(config.seeds);
  std::vector<ScenarioParams> params;
  for (double v : values) params.push_back(with_sweep_value(config.scenario, which, v));

  std::vector<RunSummary> runs(values.size() * n_seeds);
  parallel_for(runs.size(), [&](std::size_t t) {
    ExperimentConfig c = config;
    c.scenario = params[t / n_seeds];
    runs[t] = run_seed(c, config.run.seed + t % n_seeds, LinearizationMode::posterior);
  });

  std::vector<SweepPoint> out;
  for (std::size_t v = 0; v < values.size(); ++v) {
    SweepPoint p;
    p.value = values[v];
    p.seeds = int(n_seeds);
    for (std::size_t s = 0; s < n_seeds; ++s) {
      const RunSummary& r = runs[v * n_seeds + s];
      p.pos_rmse.push_back(r.final_pos_rmse());
      p.dir_rmse.push_back(r.final_dir_rmse());
      p.seconds.push_back(r.seconds);
      p.health.merge(r.health);
    }
    p.pos_mean = mean(p.pos_rmse);
    p.pos_stderr = standard_error(p.pos_rmse);
    p.dir_mean = mean(p.dir_rmse);
    p.dir_stderr = standard_error(p.dir_rmse);
    out.push_back(std::move(p));
  }
  return out;
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::string num(double x) {
  std::ostringstream os;
  os << std::setprecision(10) << x;
  return os.str();
}

}  // namespace

std::string header_block(const ExperimentConfig& config) {
  std::ostringstream os;
  os << kConfigBegin << '\n';
  std::istringstream body(to_json(config).dump(2));
  std::string line;
  while (std::getline(body, line)) os << "# " << line << '\n';
  os << kConfigEnd << '\n';
  return os.str();
}

void write_metrics_csv(std::ostream& out, const ExperimentConfig& config, std::span<const RunSummary> runs) {
  out << header_block(config);
  const std::size_t n_seeds = std::size_t(config.seeds);
  for (std::size_t m = 0; m < config.modes.size(); ++m) {
    std::vector<double> pos0, dir0;
    for (std::size_t s = 0; s < n_seeds; ++s) {
      pos0.push_back(runs[m * n_seeds + s].initial_pos_rmse);
      dir0.push_back(runs[m * n_seeds + s].initial_dir_rmse);
    }
    out << "# initial " << to_string(config.modes[m]) << ": pos_rmse_m=" << num(mean(pos0))
        << " dir_rmse_rad=" << num(mean(dir0)) << '\n';
  }
  out << "k,m,mode,pos_rmse_m,dir_rmse_rad\n";
  for (std::size_t m = 0; m < config.modes.size(); ++m) {
    for (int k = 1; k <= config.run.K; ++k) {
      std::vector<double> pos, dir;
      for (std::size_t s = 0; s < n_seeds; ++s) {
        const IterationMetrics& it = runs[m * n_seeds + s].iterations.at(std::size_t(k - 1));
        pos.push_back(it.pos_rmse);
        dir.push_back(it.dir_rmse);
      }
      out << k << ',' << config.run.M << ',' << to_string(config.modes[m]) << ',' << num(mean(pos)) << ','
          << num(mean(dir)) << '\n';
    }
  }
}

void write_vehicle_errors_csv(std::ostream& out, const ExperimentConfig& config,
                              std::span<const RunSummary> runs) {
  out << header_block(config);
  out << "seed,mode,id,anchor,pos_err_m,dir_err_rad\n";
  for (const RunSummary& r : runs)
    for (std::size_t k = 0; k < r.ids.size(); ++k)
      out << r.seed << ',' << to_string(r.mode) << ',' << r.ids[k] << ',' << (r.anchor[r.ids[k]] ? 1 : 0) << ','
          << num(r.pos_errors[k]) << ',' << num(r.dir_errors[k]) << '\n';
}

void write_cdf_csv(std::ostream& out, const ExperimentConfig& config, std::span<const RunSummary> runs) {
  out << header_block(config);
  out << "mode,metric,threshold,fraction\n";
  for (LinearizationMode mode : config.modes) {
    std::vector<double> pos, dir;
    for (const RunSummary& r : runs) {
      if (r.mode != mode) continue;
      pos.insert(pos.end(), r.pos_errors.begin(), r.pos_errors.end());
      dir.insert(dir.end(), r.dir_errors.begin(), r.dir_errors.end());
    }
    for (const auto& [metric, sample] : {std::pair{"position_m", pos}, std::pair{"direction_rad", dir}}) {
      const EmpiricalCdf cdf = error_cdf(sample);
      for (const auto& [x, f] : cdf.points())
        out << to_string(mode) << ',' << metric << ',' << num(x) << ',' << num(f) << '\n';
    }
  }
}

void write_sweep_csv(std::ostream& out, const ExperimentConfig& config, SweepParameter p,
                     std::span<const SweepPoint> points) {
  out << header_block(config);
  out << "parameter,value,seeds,pos_rmse_mean,pos_rmse_stderr,dir_rmse_mean,dir_rmse_stderr\n";
  for (const SweepPoint& s : points)
    out << to_string(p) << ',' << num(s.value) << ',' << s.seeds << ',' << num(s.pos_mean) << ','
        << num(s.pos_stderr) << ',' << num(s.dir_mean) << ',' << num(s.dir_stderr) << '\n';
}

}  // namespace coloc
