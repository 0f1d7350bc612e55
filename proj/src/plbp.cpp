#include "coloc/plbp.hpp"

namespace coloc {

std::string to_string(LinearizationMode mode) {
  return mode == LinearizationMode::posterior ? "posterior" : "prior";
}

LinearizationMode mode_from_string(const std::string& name) {
  if (name == "posterior") return LinearizationMode::posterior;
  if (name == "prior") return LinearizationMode::prior;
  throw ParseError("unknown linearization mode '" + name + "'");
}

LinearModel aoa_linearizer(const Gaussiand& joint, const Observation& measurement) {
  if (measurement.z.size() != kMeasDim) throw DomainError("aoa_linearizer: expected a two-angle measurement");
  return slr_linearize(joint, AoAPair{measurement.z, measurement.noise_cov});
}

RunResult run_plbp(const FactorGraph& graph, const RunConfig& config, const EdgeLinearizer& linearize,
                   const IterationHook& hook) {
  if (config.K < 1 || config.M < 1) throw DomainError("run_plbp: K and M must be at least 1");
  FactorGraph g = graph;
  const std::size_t edges = g.edge_count();

  std::vector<Gaussiand> prior_joints;
  prior_joints.reserve(edges);
  for (const GraphEdge& e : g.edges()) prior_joints.push_back(block_diagonal(g.prior(e.i), g.prior(e.j)));

  RunResult result;
  result.beliefs = g.priors();
  result.joints = prior_joints;
  Inbox inbox(g);

  for (int k = 1; k <= config.K; ++k) {
    const bool relinearize = config.mode == LinearizationMode::posterior || k == 1;
    if (relinearize) {
      for (std::size_t e = 0; e < edges; ++e) {
        const Gaussiand& point = config.mode == LinearizationMode::posterior ? result.joints[e] : prior_joints[e];
        g.set_model(e, linearize(point, g.edge(e).measurement));
      }
      inbox = Inbox(g);
    }
    SweepResult sweep = bp_sweep(g, std::move(inbox), config.M, config.bp);
    result.health.merge(sweep.health);
    inbox = std::move(sweep.inbox);
    result.beliefs = std::move(sweep.beliefs);
    result.joints = std::move(sweep.joints);
    if (config.record_history) result.history.push_back({k, result.beliefs, result.joints});
    if (hook) hook(k, result.beliefs);
  }

  result.models.reserve(edges);
  for (const GraphEdge& e : g.edges()) result.models.push_back(e.model);
  return result;
}

RunResult run_plbp(const Scenario& scenario, const RunConfig& config, const IterationHook& hook) {
  return run_plbp(make_factor_graph(scenario), config, aoa_linearizer, hook);
}

double complexity_estimate(int K, int M, double mean_neighbors, int state_dim) {
  const double d = double(state_dim);
  return double(K) * double(M) * mean_neighbors * d * d * d;
}

double complexity_estimate(const Scenario& scenario, const RunConfig& config) {
  const double n = double(scenario.size());
  const double mean_neighbors = n > 0 ? 2.0 * double(scenario.edges.size()) / n : 0.0;
  return complexity_estimate(config.K, config.M, mean_neighbors);
}

}  // namespace coloc
