#pragma once

#include "coloc/core.hpp"
#include "coloc/gaussian.hpp"
#include "coloc/geometry.hpp"
#include "coloc/slr.hpp"

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace coloc {

/// Measurement carried by an edge: z with noise covariance R. Usually the
/// two AoA angles, but any dimension works for linear test models.
struct Observation {
  VectorXd z;
  MatrixXd noise_cov;

  Observation() = default;
  Observation(VectorXd z_, MatrixXd r_) : z(std::move(z_)), noise_cov(std::move(r_)) {}
  Observation(const AoAPair& p) : z(p.z), noise_cov(p.noise_cov) {}  // NOLINT
};

/// Directed BP message in pseudo-observation form: alpha = H x_to + v,
/// v ~ N(0, gamma).
struct Message {
  VectorXd alpha;
  MatrixXd H;
  MatrixXd gamma;
  VehicleId from = 0;
  VehicleId to = 0;
  int iteration = 0;
  Innovation innovation = Innovation::angular;
};

enum class Direction { i_to_j, j_to_i };

/// Which measurement rows a directed message carries.
enum class MessageForm {
  vector,  // both AoA components
  scalar,  // only the component measured at the sender
};

struct BpOptions {
  MessageForm form = MessageForm::vector;
  // Angular innovations are wrapped; linear test models switch this off.
  Innovation innovation = Innovation::angular;
};

/// Counters for PSD / finiteness checks run on every message and belief.
struct NumericHealth {
  std::size_t checks = 0;
  std::size_t psd_violations = 0;
  std::size_t nonfinite = 0;
  std::string first_problem;

  void check(const Gaussiand& g, const char* what);
  void check(const Message& m);
  void check_value(double v, const char* what);
  void merge(const NumericHealth& other);
  bool clean() const { return psd_violations == 0 && nonfinite == 0; }
};

struct GraphEdge {
  VehicleId i = 0;
  VehicleId j = 0;
  Observation measurement;
  LinearModel model;
};

/// A neighbor of some vehicle as seen through one edge.
struct Neighbor {
  std::size_t edge = 0;
  VehicleId vehicle = 0;
  // Direction of the message from this vehicle to the neighbor.
  Direction outgoing = Direction::i_to_j;
};

/// Vehicle priors and pairwise measurement edges with their current linear
/// models. Edges are stored with i < j; one edge per unordered pair.
class FactorGraph {
 public:
  FactorGraph() = default;

  VehicleId add_vehicle(Gaussiand prior);
  std::size_t add_edge(VehicleId i, VehicleId j, Observation measurement, LinearModel model = {});

  void set_model(std::size_t edge, LinearModel model);

  std::size_t vehicle_count() const { return priors_.size(); }
  std::size_t edge_count() const { return edges_.size(); }
  const Gaussiand& prior(VehicleId v) const { return priors_.at(v); }
  const std::vector<Gaussiand>& priors() const { return priors_; }
  const GraphEdge& edge(std::size_t e) const { return edges_.at(e); }
  const std::vector<GraphEdge>& edges() const { return edges_; }
  const std::vector<Neighbor>& neighbors(VehicleId v) const { return adjacency_.at(v); }
  std::optional<std::size_t> find_edge(VehicleId a, VehicleId b) const;

 private:
  std::vector<Gaussiand> priors_;
  std::vector<GraphEdge> edges_;
  std::vector<std::vector<Neighbor>> adjacency_;
};

/// Latest message on every directed edge. Slot 2e carries i->j of edge e,
/// slot 2e+1 carries j->i. Empty slots are the unit message.
class Inbox {
 public:
  Inbox() = default;
  explicit Inbox(const FactorGraph& graph) : slots_(2 * graph.edge_count()) {}

  static std::size_t slot(std::size_t edge, Direction d) {
    return 2 * edge + (d == Direction::j_to_i ? 1 : 0);
  }
  const std::optional<Message>& at(std::size_t edge, Direction d) const {
    return slots_.at(slot(edge, d));
  }
  void put(std::size_t edge, Direction d, Message m) { slots_.at(slot(edge, d)) = std::move(m); }
  std::size_t size() const { return slots_.size(); }
  std::size_t filled() const;

 private:
  std::vector<std::optional<Message>> slots_;
};

/// Messages addressed to `v`, optionally skipping the one arriving from
/// `exclude`.
std::vector<Message> messages_to(const FactorGraph& graph, const Inbox& inbox, VehicleId v,
                                 std::optional<VehicleId> exclude = std::nullopt);

/// Prior updated with every message in `inbox`, one Kalman update each.
Gaussiand compute_belief(const Gaussiand& prior, std::span<const Message> inbox);

/// Prior of `v` times all incoming messages except the one from `exclude`.
Gaussiand extrinsic_belief(const FactorGraph& graph, VehicleId v, std::optional<VehicleId> exclude,
                           const Inbox& inbox);

/// Message sent along `direction` of an edge, given the sender's extrinsic
/// belief:
///   alpha = z - A_s mu_s - b,  H = A_r,  gamma = R + omega + A_s P_s A_s^T.
/// In scalar form only the row measured at the sender is kept.
Message compute_message(const LinearModel& model, const Observation& measurement,
                        const Gaussiand& sender_extrinsic, Direction direction,
                        const BpOptions& options = {});

/// Joint belief of the two endpoints of `edge`: block-diagonal product of both
/// extrinsic beliefs updated with the edge's linearized likelihood
/// (observation z - b, H = A, noise omega + R).
Gaussiand joint_belief(const FactorGraph& graph, std::size_t edge, const Inbox& inbox,
                       Innovation innovation = Innovation::angular);

struct SweepResult {
  std::vector<Gaussiand> beliefs;
  std::vector<Gaussiand> joints;  // one per edge
  Inbox inbox;
  NumericHealth health;
};

/// M synchronous (flooding) BP iterations starting from `inbox`. Every
/// directed message of iteration m is computed from the inbox of m - 1.
SweepResult bp_sweep(const FactorGraph& graph, Inbox inbox, int iterations,
                     const BpOptions& options = {});

}  // namespace coloc
