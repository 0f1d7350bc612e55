#pragma once

#include "coloc/bp.hpp"
#include "coloc/core.hpp"
#include "coloc/gaussian.hpp"
#include "coloc/scenario.hpp"
#include "coloc/slr.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace coloc {

/// Which belief each edge is linearized against in the outer loop.
enum class LinearizationMode {
  posterior,  // current joint pair belief
  prior,      // product of the two priors, at every outer iteration
};

std::string to_string(LinearizationMode mode);
LinearizationMode mode_from_string(const std::string& name);

struct RunConfig {
  int K = 10;  // outer (re-linearization) iterations
  int M = 3;   // BP iterations per linearization
  LinearizationMode mode = LinearizationMode::posterior;
  std::uint64_t seed = 1;
  bool record_history = true;
  BpOptions bp;
};

struct IterationRecord {
  int k = 0;
  std::vector<Gaussiand> beliefs;
  std::vector<Gaussiand> joints;
};

struct RunResult {
  std::vector<IterationRecord> history;  // K entries when recorded
  std::vector<Gaussiand> beliefs;        // final marginal beliefs
  std::vector<Gaussiand> joints;         // final joint beliefs per edge
  std::vector<LinearModel> models;       // last linearization per edge
  NumericHealth health;
};

/// Fits an edge's linear model against a joint pair belief.
using EdgeLinearizer = std::function<LinearModel(const Gaussiand& joint, const Observation& measurement)>;
/// Called after each outer iteration with k and the marginal beliefs.
using IterationHook = std::function<void(int k, const std::vector<Gaussiand>& beliefs)>;

/// Sigma-point SLR of the AoA pair model with the angle correction.
LinearModel aoa_linearizer(const Gaussiand& joint, const Observation& measurement);

/// Iterated posterior linearization with Gaussian BP.
///
/// For k = 1..K every edge is re-linearized (against the joint belief of
/// iteration k-1, or the prior product in prior mode) and M flooding BP
/// iterations run on the new models from empty inboxes. In prior mode the
/// models never change, so messages carry over between outer iterations.
RunResult run_plbp(const FactorGraph& graph, const RunConfig& config,
                   const EdgeLinearizer& linearize = aoa_linearizer, const IterationHook& hook = {});

RunResult run_plbp(const Scenario& scenario, const RunConfig& config, const IterationHook& hook = {});

/// K * M * mean_neighbors * state_dim^3 operations per vehicle.
double complexity_estimate(int K, int M, double mean_neighbors, int state_dim = int(kStateDim));
double complexity_estimate(const Scenario& scenario, const RunConfig& config);

}  // namespace coloc
