#pragma once

#include "coloc/bp.hpp"
#include "coloc/core.hpp"
#include "coloc/gaussian.hpp"
#include "coloc/scenario.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace coloc {

// Reference posteriors for small problems, computed without message passing.

/// Pairwise measurement function h(x_i, x_j).
using PairModel = std::function<VectorXd(const VectorXd& x_i, const VectorXd& x_j)>;

/// The AoA pair model on two 3-vectors.
VectorXd aoa_pair_model(const VectorXd& x_i, const VectorXd& x_j);

struct OracleEdge {
  VehicleId i = 0;
  VehicleId j = 0;
  Observation measurement;
};

struct OracleOptions {
  std::size_t sample_count = 1'000'000;
  std::uint64_t seed = 1;
  // Wrap measurement residuals and average headings (state component 2) on
  // the circle. Off for linear test models.
  bool angular = true;
};

struct OracleResult {
  std::vector<Gaussiand> posteriors;    // per-vehicle weighted moments
  std::vector<VectorXd> mean_stderr;    // standard error of each posterior mean
  double effective_sample_size = 0.0;
};

// Joint state dimension above which importance sampling is refused.
inline constexpr Index kOracleMaxDim = 9;
// Minimum effective sample size of a trustworthy estimate.
inline constexpr double kOracleMinEss = 100.0;

/// Self-normalized importance sampling from the product of priors with
/// weights exp(-1/2 sum_e r_e^T R_e^{-1} r_e), r_e = z_e - h(x_i, x_j).
/// Throws NumericError when the effective sample size drops below 100.
OracleResult importance_posterior(std::span<const Gaussiand> priors, std::span<const OracleEdge> edges,
                                  const OracleOptions& options, const PairModel& h = aoa_pair_model);

OracleResult importance_posterior(const Scenario& scenario, const OracleOptions& options);

/// Exact joint posterior of every vehicle under the affine edge models of
/// `graph` (observation z - b = A x_ij + N(0, R + omega)), solved in
/// information form over the stacked state.
Gaussiand dense_linear_solve(const FactorGraph& graph);

}  // namespace coloc
