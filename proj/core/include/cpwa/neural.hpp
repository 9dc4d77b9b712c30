#ifndef CPWA_NEURAL_HPP
#define CPWA_NEURAL_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cpwa/abstraction.hpp"
#include "cpwa/dynamics.hpp"
#include "cpwa/geometry.hpp"

namespace cpwa {

/// One-hidden-layer ReLU network u = W2 max(W1 x + b1, 0) + b2. The output
/// layer is linear, so the linear regions depend on the hidden layer only.
struct ReluNet {
  Eigen::MatrixXd W1;  // width x n
  Eigen::VectorXd b1;  // width
  Eigen::MatrixXd W2;  // m x width
  Eigen::VectorXd b2;  // m

  int input_dim() const { return static_cast<int>(W1.cols()); }
  int hidden_width() const { return static_cast<int>(W1.rows()); }
  int output_dim() const { return static_cast<int>(W2.rows()); }

  Eigen::VectorXd hidden(const Eigen::VectorXd& x) const;
  Eigen::VectorXd forward(const Eigen::VectorXd& x) const;

  /// Weights uniform in [-0.5, 0.5], deterministic fill order for a seed.
  static ReluNet random(int n, int m, int width, std::uint64_t seed);
};

/// Activation-pattern cell of a net intersected with an abstract state:
/// pattern bit j is true iff neuron j is active (pre-activation >= 0) on the
/// cell. On the cell h(x) = G x + g and the end-to-end map is the affine law.
struct LinearRegion {
  std::vector<bool> pattern;
  HPolytope region;    // abstract-state rows plus signed activation halfspaces
  Eigen::MatrixXd G;   // width x n, rows of inactive neurons zeroed
  Eigen::VectorXd g;   // width
  AffineLaw law;       // K = W2 G, b = W2 g + b2
};

/// All activation patterns whose cell meets q (closed intersection), found by
/// recursive halfspace splitting with LP feasibility checks. Regions come out
/// in lexicographic pattern order (inactive < active).
std::vector<LinearRegion> enumerate_regions(const ReluNet& net, const Box& q);

/// Index of the first region (lexicographic pattern order) containing x, or
/// -1. Points on activation boundaries thus resolve to the lexicographically
/// first matching pattern.
int locate_region(const std::vector<LinearRegion>& regions, const Eigen::VectorXd& x,
                  double tol = 1e-9);

struct ProjectionInfeasible : std::runtime_error {
  explicit ProjectionInfeasible(std::string msg, std::vector<int> regions_)
      : std::runtime_error(std::move(msg)), regions(std::move(regions_)) {}
  std::vector<int> regions;  // indices of regions implicated in infeasibility
};

struct ProjectionResult {
  Eigen::MatrixXd W2;
  Eigen::VectorXd b2;
  double bound = 0.0;  // optimal epigraph value: certified output deviation
};

/// Epigraph LP that minimally perturbs the output layer so that every region
/// law over q lies inside the partition box. The hidden layer is untouched,
/// so the region set is unchanged. Throws ProjectionInfeasible when the
/// partition cannot accommodate the hidden-layer geometry.
ProjectionResult project_weights(const ReluNet& net, const std::vector<LinearRegion>& regions,
                                 const Box& q, const ControllerPartition& partition);
ProjectionResult project_weights(const ReluNet& net, const Box& q,
                                 const ControllerPartition& partition);

/// Right-hand side of the output-deviation bound: max over region vertices of
/// sum_ij |dW_ij| h_j(x) + sum_i |db_i|. Requires identical hidden layers.
double deviation_bound_check(const ReluNet& before, const ReluNet& after, const Box& q,
                             const std::vector<LinearRegion>& regions);

struct ExpertSample {
  Eigen::VectorXd x;
  Eigen::VectorXd u;
  Eigen::VectorXd law;  // flattened witness (K, b) with u = K x + b exactly
};

/// Deterministic low-discrepancy samples over q labeled by a greedy expert:
/// for each x the candidate law (grid over the partition: vertices, center,
/// edge midpoints) minimizing the distance-to-goal of the one-step image is
/// chosen, ties to the lowest candidate index. For the unicycle the metric
/// adds a small heading-alignment term, since the position after one step
/// does not depend on the input. Labels satisfy u = K(x) with K in the
/// partition by construction.
std::vector<ExpertSample> generate_expert_data(const Box& q, const ControllerPartition& partition,
                                               const SystemModel& model, const Box& goal, int count,
                                               std::uint64_t seed,
                                               const StateSpace* space = nullptr);

struct TrainingDiverged : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct TrainResult {
  ReluNet net;
  std::vector<double> loss;  // MSE per epoch (evaluated before each update)
};

/// Full-batch gradient descent on the mean squared output error.
TrainResult constrained_train(ReluNet net, const std::vector<ExpertSample>& data, int epochs,
                              double lr);

struct TrainConfig {
  int hidden_width = 4;
  int epochs = 400;
  double lr = 0.1;
  int max_iter = 1;   // train/project alternations
  int samples = 150;  // expert samples per state
  std::uint64_t seed = 0;
};

struct SafeTrainResult {
  ReluNet net;
  double bound = 0.0;         // deviation bound of the final projection
  double final_loss = 0.0;
};

/// Alternates training and weight projection; the returned net's every region
/// law over q lies inside the partition.
SafeTrainResult safe_train(const Box& q, const ControllerPartition& partition,
                           const SystemModel& model, const Box& goal, const TrainConfig& config,
                           const StateSpace* space = nullptr);

/// Gated parallel composition of per-state local networks. Dispatch is exact
/// point location over the gate boxes in ascending state id, which matches
/// the step-gated sum everywhere except on shared faces, where the lowest id
/// wins deterministically.
struct GlobalController {
  struct Module {
    int state_id = -1;
    Box gate;
    ReluNet net;
    int partition_id = -1;  // provenance of the projection target
  };

  std::vector<Module> modules;  // ascending state id
  Box bounds;
  std::vector<int> circular_axes;

  struct Eval {
    bool inside = false;
    int state_id = -1;
    Eigen::VectorXd u;
  };

  /// Wraps circular axes, then dispatches; outside every gate the outcome is
  /// an explicit miss, not a control value.
  Eval evaluate(const Eigen::VectorXd& x) const;
};

GlobalController compose_global(const std::map<int, ReluNet>& locals, const StateSpace& space,
                                const std::map<int, int>& partition_of = {});

/// Checks Reach(q, net) against a union of target boxes: every region's
/// one-step interval image (under that region's exact law, disturbance
/// included) must be covered. Post boxes are wrapped on circular axes when a
/// state space is supplied.
bool reach_check(const Box& q, const ReluNet& net, const SystemModel& model,
                 const std::vector<Box>& targets, const StateSpace* space = nullptr);

}  // namespace cpwa

#endif  // CPWA_NEURAL_HPP
