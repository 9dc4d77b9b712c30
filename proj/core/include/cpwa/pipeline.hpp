#ifndef CPWA_PIPELINE_HPP
#define CPWA_PIPELINE_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cpwa/abstraction.hpp"
#include "cpwa/liveness.hpp"
#include "cpwa/neural.hpp"

namespace cpwa {

struct SpecValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Per-axis state partition: uniform cell counts or explicit interior cuts.
struct StatePartitionSpec {
  std::vector<int> uniform_counts;            // empty when cuts are explicit
  std::vector<std::vector<double>> cuts;      // used when uniform_counts empty

  PartitionScheme make_scheme(const Box& bounds) const;
};

struct WorkspaceSpec {
  std::string name;

  Box state_bounds;
  StatePartitionSpec state_partition;
  std::vector<int> circular_axes;
  Box goal;
  std::vector<Box> obstacles;

  Box controller_bounds;
  std::vector<int> controller_counts;

  ModelKind model_kind = ModelKind::Unicycle;
  double speed = 1.0;
  double dt = 0.1;
  int chain_n = 2;
  int chain_m = 2;
  std::optional<Box> disturbance;

  int horizon = 100;
  TrainConfig training;
  int retrain_attempts = 2;  // ranked-partition fallbacks per failing state
  LivenessConfig sampling;   // horizon field mirrored from `horizon`
  std::uint64_t seed = 0;

  SystemModel make_model() const;
  StateSpace make_space() const;
  LivenessConfig make_liveness_config() const;
};

/// Structural validation: special regions inside bounds, goal disjoint from
/// every obstacle, partition parameters sane. Throws SpecValidationError with
/// the offending boxes named.
void validate(const WorkspaceSpec& spec);

struct StageTiming {
  std::string stage;
  double seconds = 0.0;
};

struct ReachReport {
  int state_id = -1;
  int partition_id = -1;  // partition the final local net was projected on
  int attempts = 0;       // training attempts consumed (>= 1)
  bool passed = false;    // Reach(q) covered by the progress set
};

struct SynthesisResult {
  StateSpace space;
  std::vector<ControllerPartition> partitions;
  PosteriorGraph graph;
  SafeSets safe;
  PredecessorGraph pred;
  Assignment assignment;
  std::map<int, ReluNet> locals;        // per safe normal state
  std::map<int, int> local_partition;   // state -> partition the net respects
  GlobalController controller;
  std::vector<ReachReport> reach;
  /// chain_certified[q]: reach_check passed at q and, recursively, at every
  /// progress successor down to the goal — the liveness precondition made
  /// checkable per start state.
  std::vector<char> chain_certified;
  std::vector<StageTiming> timings;
};

SynthesisResult run_synthesis(const WorkspaceSpec& spec, int jobs = 1);

enum class DisturbancePolicy { None, WorstCaseVertex, RandomInBox };

std::string to_string(DisturbancePolicy policy);
DisturbancePolicy disturbance_policy_from_string(const std::string& s);

struct Trajectory {
  std::vector<Eigen::VectorXd> states;  // wrapped onto circular axes
  std::vector<Eigen::VectorXd> inputs;
  std::vector<Eigen::VectorXd> disturbances;
  std::vector<char> row_safe;          // per state: outside every obstacle
  std::vector<char> row_goal;          // per state: inside the goal
  bool safety_ok = true;      // no state inside any obstacle
  bool liveness_ok = false;   // goal entered within the horizon
  int goal_step = -1;
  bool degenerate = false;    // started inside the goal
  bool outside_safe_set = false;
  int outside_step = -1;
};

/// Closed-loop rollout for at most `horizon` steps or until goal entry. The
/// dispatcher failing to cover a visited state is recorded as an
/// outside-safe-set event (it cannot happen when the safety argument holds).
Trajectory simulate(const GlobalController& controller, const SystemModel& model,
                    const StateSpace& space, const Eigen::VectorXd& x0, int horizon,
                    DisturbancePolicy policy, std::uint64_t seed);

}  // namespace cpwa

#endif  // CPWA_PIPELINE_HPP
