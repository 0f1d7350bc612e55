#include "coloc/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace coloc {

VectorXd aoa_pair_model(const VectorXd& x_i, const VectorXd& x_j) {
  VectorXd stacked(2 * kStateDim);
  stacked << x_i, x_j;
  return measure_pair(stacked);
}

OracleResult importance_posterior(std::span<const Gaussiand> priors, std::span<const OracleEdge> edges,
                                  const OracleOptions& options, const PairModel& h) {
  if (options.sample_count < 100'000) throw DomainError("importance_posterior: need at least 1e5 samples");
  if (priors.empty()) throw DomainError("importance_posterior: no vehicles");
  const Index d = priors.front().dim();
  const std::size_t n_vehicles = priors.size();
  if (Index(n_vehicles) * d > kOracleMaxDim)
    throw DomainError("importance_posterior: joint dimension too large for importance sampling");

  std::vector<MatrixXd> roots;
  for (const Gaussiand& p : priors) {
    if (p.dim() != d) throw DomainError("importance_posterior: mixed state dimensions");
    validate(p, "importance_posterior prior");
    roots.push_back(symmetric_sqrt<double>(p.cov));
  }
  std::vector<Eigen::LDLT<MatrixXd>> precisions;
  for (const OracleEdge& e : edges) {
    if (e.i >= n_vehicles || e.j >= n_vehicles) throw DomainError("importance_posterior: unknown vehicle");
    precisions.emplace_back(e.measurement.noise_cov);
    if (precisions.back().info() != Eigen::Success)
      throw NumericError("importance_posterior: noise covariance factorization failed");
  }

  const std::size_t N = options.sample_count;
  const Index D = Index(n_vehicles) * d;
  MatrixXd samples(D, Index(N));
  VectorXd log_w = VectorXd::Zero(Index(N));
  std::mt19937_64 rng(options.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  VectorXd u(d);
  for (std::size_t s = 0; s < N; ++s) {
    for (std::size_t v = 0; v < n_vehicles; ++v) {
      for (Index k = 0; k < d; ++k) u(k) = normal(rng);
      samples.col(Index(s)).segment(Index(v) * d, d) = priors[v].mean + roots[v] * u;
    }
    double lw = 0.0;
    for (std::size_t e = 0; e < edges.size(); ++e) {
      const OracleEdge& edge = edges[e];
      const VectorXd xi = samples.col(Index(s)).segment(Index(edge.i) * d, d);
      const VectorXd xj = samples.col(Index(s)).segment(Index(edge.j) * d, d);
      VectorXd r = edge.measurement.z - h(xi, xj);
      if (options.angular) r = wrap_angles(r);
      lw -= 0.5 * r.dot(precisions[e].solve(r));
    }
    log_w(Index(s)) = lw;
  }

  const double top = log_w.maxCoeff();
  const VectorXd w = (log_w.array() - top).exp().matrix();
  const double w_sum = w.sum();
  const double ess = w_sum * w_sum / w.squaredNorm();
  if (!(ess >= kOracleMinEss))
    throw NumericError("importance_posterior: effective sample size " + std::to_string(ess) + " below 100");

  // Headings are averaged as offsets from the prior mean heading.
  if (options.angular && d == kStateDim) {
    for (std::size_t v = 0; v < n_vehicles; ++v) {
      const Index row = Index(v) * d + 2;
      const double ref = priors[v].mean(2);
      for (Index s = 0; s < Index(N); ++s) samples(row, s) = ref + wrap_angle(samples(row, s) - ref);
    }
  }

  const VectorXd wn = w / w_sum;
  const VectorXd mean = samples * wn;
  const MatrixXd centered = samples.colwise() - mean;
  const MatrixXd cov = centered * wn.asDiagonal() * centered.transpose();
  const VectorXd se = (centered.array().square().matrix() * wn.array().square().matrix()).cwiseSqrt();

  OracleResult out;
  out.effective_sample_size = ess;
  for (std::size_t v = 0; v < n_vehicles; ++v) {
    VectorXd m = mean.segment(Index(v) * d, d);
    if (options.angular && d == kStateDim) m(2) = wrap_angle(m(2));
    out.posteriors.emplace_back(m, symmetrized(MatrixXd(cov.block(Index(v) * d, Index(v) * d, d, d))));
    out.mean_stderr.push_back(se.segment(Index(v) * d, d));
  }
  return out;
}

OracleResult importance_posterior(const Scenario& scenario, const OracleOptions& options) {
  std::vector<OracleEdge> edges;
  for (const ScenarioEdge& e : scenario.edges) edges.push_back({e.i, e.j, Observation(e.measurement)});
  return importance_posterior(scenario.priors, edges, options);
}

Gaussiand dense_linear_solve(const FactorGraph& graph) {
  const std::size_t n = graph.vehicle_count();
  if (n == 0) throw DomainError("dense_linear_solve: empty graph");
  const Index d = graph.prior(0).dim();
  const Index D = Index(n) * d;

  MatrixXd info = MatrixXd::Zero(D, D);
  VectorXd eta = VectorXd::Zero(D);
  for (VehicleId v = 0; v < n; ++v) {
    const Gaussiand& p = graph.prior(v);
    const Eigen::LDLT<MatrixXd> ldlt(p.cov);
    if (ldlt.info() != Eigen::Success || !(ldlt.vectorD().array() > 0.0).all())
      throw NumericError("dense_linear_solve: prior " + std::to_string(v) + " is singular");
    info.block(Index(v) * d, Index(v) * d, d, d) += ldlt.solve(MatrixXd::Identity(d, d));
    eta.segment(Index(v) * d, d) += ldlt.solve(p.mean);
  }
  for (const GraphEdge& e : graph.edges()) {
    if (e.model.A.size() == 0) throw DomainError("dense_linear_solve: edge without a linear model");
    MatrixXd H = MatrixXd::Zero(e.model.A.rows(), D);
    H.middleCols(Index(e.i) * d, d) = e.model.block_i();
    H.middleCols(Index(e.j) * d, d) = e.model.block_j();
    const Eigen::LDLT<MatrixXd> noise(MatrixXd(e.measurement.noise_cov + e.model.omega));
    if (noise.info() != Eigen::Success) throw NumericError("dense_linear_solve: singular edge noise");
    info += H.transpose() * noise.solve(H);
    eta += H.transpose() * noise.solve(VectorXd(e.measurement.z - e.model.b));
  }
  const Eigen::LDLT<MatrixXd> solver(symmetrized(info));
  if (solver.info() != Eigen::Success) throw NumericError("dense_linear_solve: singular information matrix");
  MatrixXd cov = symmetrized(MatrixXd(solver.solve(MatrixXd::Identity(D, D))));
  VectorXd mean = cov * eta;
  return {std::move(mean), std::move(cov)};
}

}  // namespace coloc
