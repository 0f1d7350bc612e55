#include "coloc/bp.hpp"

#include <algorithm>
#include <cmath>

namespace coloc {

// Eigenvalue floor applied to message covariances.
static constexpr double kGammaFloor = 1e-12;

void NumericHealth::check(const Gaussiand& g, const char* what) {
  ++checks;
  if (!g.mean.allFinite() || !g.cov.allFinite()) {
    ++nonfinite;
    if (first_problem.empty()) first_problem = std::string(what) + ": non-finite";
    return;
  }
  if (auto why = psd_violation<double>(g.cov)) {
    ++psd_violations;
    if (first_problem.empty()) first_problem = std::string(what) + ": " + *why;
  }
}

void NumericHealth::check(const Message& m) {
  ++checks;
  if (!m.alpha.allFinite() || !m.H.allFinite() || !m.gamma.allFinite()) {
    ++nonfinite;
    if (first_problem.empty()) first_problem = "message: non-finite";
    return;
  }
  if (auto why = psd_violation<double>(m.gamma)) {
    ++psd_violations;
    if (first_problem.empty()) first_problem = "message gamma: " + *why;
  }
}

void NumericHealth::check_value(double v, const char* what) {
  ++checks;
  if (!std::isfinite(v)) {
    ++nonfinite;
    if (first_problem.empty()) first_problem = std::string(what) + ": non-finite";
  }
}

void NumericHealth::merge(const NumericHealth& other) {
  checks += other.checks;
  psd_violations += other.psd_violations;
  nonfinite += other.nonfinite;
  if (first_problem.empty()) first_problem = other.first_problem;
}

VehicleId FactorGraph::add_vehicle(Gaussiand prior) {
  validate(prior, "vehicle prior");
  if (!priors_.empty() && prior.dim() != priors_.front().dim())
    throw DomainError("add_vehicle: all vehicles must share one state dimension");
  priors_.push_back(std::move(prior));
  adjacency_.emplace_back();
  return priors_.size() - 1;
}

std::size_t FactorGraph::add_edge(VehicleId i, VehicleId j, Observation measurement,
                                  LinearModel model) {
  if (i >= priors_.size() || j >= priors_.size())
    throw DomainError("add_edge: unknown vehicle id");
  if (i >= j) throw DomainError("add_edge: edges are stored with i < j");
  if (find_edge(i, j)) throw DomainError("add_edge: duplicate edge");
  if (measurement.noise_cov.rows() != measurement.z.size() ||
      measurement.noise_cov.cols() != measurement.z.size())
    throw DomainError("add_edge: measurement noise dimension mismatch");
  const std::size_t e = edges_.size();
  edges_.push_back({i, j, std::move(measurement), {}});
  if (model.A.size() != 0) set_model(e, std::move(model));
  adjacency_[i].push_back({e, j, Direction::i_to_j});
  adjacency_[j].push_back({e, i, Direction::j_to_i});
  return e;
}

void FactorGraph::set_model(std::size_t e, LinearModel model) {
  GraphEdge& edge = edges_.at(e);
  const Index d = priors_.front().dim();
  const Index m = edge.measurement.z.size();
  if (model.A.rows() != m || model.A.cols() != 2 * d || model.b.size() != m ||
      model.omega.rows() != m || model.omega.cols() != m)
    throw DomainError("set_model: linear model does not match the edge dimensions");
  edge.model = std::move(model);
}

std::optional<std::size_t> FactorGraph::find_edge(VehicleId a, VehicleId b) const {
  if (a >= adjacency_.size()) return std::nullopt;
  for (const Neighbor& n : adjacency_[a])
    if (n.vehicle == b) return n.edge;
  return std::nullopt;
}

std::size_t Inbox::filled() const {
  return std::size_t(std::count_if(slots_.begin(), slots_.end(),
                                   [](const auto& s) { return s.has_value(); }));
}

static Direction reverse(Direction d) {
  return d == Direction::i_to_j ? Direction::j_to_i : Direction::i_to_j;
}

std::vector<Message> messages_to(const FactorGraph& graph, const Inbox& inbox, VehicleId v,
                                 std::optional<VehicleId> exclude) {
  std::vector<Message> out;
  for (const Neighbor& n : graph.neighbors(v)) {
    if (exclude && n.vehicle == *exclude) continue;
    if (const auto& m = inbox.at(n.edge, reverse(n.outgoing))) out.push_back(*m);
  }
  return out;
}

Gaussiand compute_belief(const Gaussiand& prior, std::span<const Message> inbox) {
  Gaussiand belief = prior;
  for (const Message& m : inbox) belief = kalman_update(belief, m.H, m.alpha, m.gamma, m.innovation);
  return belief;
}

Gaussiand extrinsic_belief(const FactorGraph& graph, VehicleId v, std::optional<VehicleId> exclude,
                           const Inbox& inbox) {
  const std::vector<Message> incoming = messages_to(graph, inbox, v, exclude);
  return compute_belief(graph.prior(v), incoming);
}

Message compute_message(const LinearModel& model, const Observation& measurement,
                        const Gaussiand& sender_extrinsic, Direction direction,
                        const BpOptions& options) {
  const Index d = model.state_dim();
  if (sender_extrinsic.dim() != d) throw DomainError("compute_message: extrinsic dimension mismatch");
  const bool from_i = direction == Direction::i_to_j;
  const MatrixXd A_s = from_i ? MatrixXd(model.block_i()) : MatrixXd(model.block_j());
  const MatrixXd A_r = from_i ? MatrixXd(model.block_j()) : MatrixXd(model.block_i());

  Message msg;
  msg.innovation = options.innovation;
  msg.alpha = measurement.z - A_s * sender_extrinsic.mean - model.b;
  msg.H = A_r;
  msg.gamma = measurement.noise_cov + model.omega + A_s * sender_extrinsic.cov * A_s.transpose();

  if (options.form == MessageForm::scalar) {
    if (measurement.z.size() != kMeasDim)
      throw DomainError("compute_message: scalar form needs a two-component measurement");
    const Index row = from_i ? 0 : 1;
    msg.alpha = VectorXd::Constant(1, msg.alpha(row));
    msg.H = MatrixXd(msg.H.row(row));
    msg.gamma = MatrixXd::Constant(1, 1, msg.gamma(row, row));
  }

  msg.gamma = psd_repair<double>(msg.gamma, kGammaFloor);
  if (!msg.alpha.allFinite() || !msg.H.allFinite() || !msg.gamma.allFinite())
    throw NumericError("compute_message: non-finite message");
  if (msg.gamma.diagonal().minCoeff() <= 0.0)
    throw NumericError("compute_message: message covariance is not positive definite");
  return msg;
}

Gaussiand joint_belief(const FactorGraph& graph, std::size_t e, const Inbox& inbox,
                       Innovation innovation) {
  if (e >= graph.edge_count()) throw DomainError("joint_belief: no such edge");
  const GraphEdge& edge = graph.edge(e);
  if (edge.model.A.size() == 0) throw DomainError("joint_belief: edge has no linear model");
  const Gaussiand bi = extrinsic_belief(graph, edge.i, edge.j, inbox);
  const Gaussiand bj = extrinsic_belief(graph, edge.j, edge.i, inbox);
  const Gaussiand product = block_diagonal(bi, bj);
  const MatrixXd noise = edge.measurement.noise_cov + edge.model.omega;
  return kalman_update(product, edge.model.A, VectorXd(edge.measurement.z - edge.model.b), noise,
                       innovation);
}

SweepResult bp_sweep(const FactorGraph& graph, Inbox inbox, int iterations,
                     const BpOptions& options) {
  if (iterations < 1) throw DomainError("bp_sweep: need at least one iteration");
  if (inbox.size() != 2 * graph.edge_count()) throw DomainError("bp_sweep: inbox does not match graph");
  for (const GraphEdge& edge : graph.edges())
    if (edge.model.A.size() == 0) throw DomainError("bp_sweep: edge without a linear model");

  int base = 0;
  for (std::size_t e = 0; e < graph.edge_count(); ++e)
    for (Direction d : {Direction::i_to_j, Direction::j_to_i})
      if (const auto& m = inbox.at(e, d)) base = std::max(base, m->iteration);

  SweepResult result;
  const std::size_t n = graph.vehicle_count();
  for (int it = 1; it <= iterations; ++it) {
    Inbox next(graph);
    for (std::size_t e = 0; e < graph.edge_count(); ++e) {
      const GraphEdge& edge = graph.edge(e);
      for (Direction d : {Direction::i_to_j, Direction::j_to_i}) {
        const VehicleId from = d == Direction::i_to_j ? edge.i : edge.j;
        const VehicleId to = d == Direction::i_to_j ? edge.j : edge.i;
        const Gaussiand extrinsic = extrinsic_belief(graph, from, to, inbox);
        Message msg = compute_message(edge.model, edge.measurement, extrinsic, d, options);
        msg.from = from;
        msg.to = to;
        msg.iteration = base + it;
        result.health.check(msg);
        next.put(e, d, std::move(msg));
      }
    }
    inbox = std::move(next);
    // Beliefs are checked after every iteration, kept after the last one.
    result.beliefs.clear();
    for (VehicleId v = 0; v < n; ++v) {
      const std::vector<Message> incoming = messages_to(graph, inbox, v);
      result.beliefs.push_back(compute_belief(graph.prior(v), incoming));
      result.health.check(result.beliefs.back(), "belief");
    }
  }

  result.joints.reserve(graph.edge_count());
  for (std::size_t e = 0; e < graph.edge_count(); ++e) {
    result.joints.push_back(joint_belief(graph, e, inbox, options.innovation));
    result.health.check(result.joints.back(), "joint belief");
  }
  result.inbox = std::move(inbox);
  return result;
}

}  // namespace coloc
