#ifndef CPWA_LIVENESS_HPP
#define CPWA_LIVENESS_HPP

#include <limits>
#include <utility>
#include <vector>

#include "cpwa/abstraction.hpp"

namespace cpwa {

constexpr int kUnreachable = std::numeric_limits<int>::max();

/// Edge of the predecessor graph, with a replayable witness: stepping the
/// witness point under the witness law lands in the target state.
struct PredEdge {
  int target = -1;
  Eigen::VectorXd witness_x;
  Eigen::VectorXd witness_law;  // flattened K then b
};

/// Finite transition system over the safe states (Pre-based). Labels at a
/// state are restricted to its safe partitions; edges are established by grid
/// sampling, so the edge set under-approximates the true Pre relation (a
/// present edge is always genuine, absences may be spurious).
struct PredecessorGraph {
  int num_states = 0;
  int goal_id = -1;
  /// edges[q][p] sorted by target; empty unless q is a safe normal state and
  /// p is in p_safe(q).
  std::vector<std::vector<std::vector<PredEdge>>> edges;

  std::vector<int> successors(int q, int p) const;
  const PredEdge* find_edge(int q, int p, int target) const;
};

struct LivenessConfig {
  int state_grid = 3;    // sample points per state axis for Pre edges
  int law_grid = 3;      // grid per controller-parameter axis
  int measure_grid = 6;  // points per axis for the progress-measure estimate
  int horizon = 100;     // reach-avoid horizon T in abstract steps
};

PredecessorGraph build_predecessor_graph(const SafeSets& safe, const StateSpace& space,
                                         const std::vector<ControllerPartition>& partitions,
                                         const SystemModel& model, const LivenessConfig& config,
                                         int jobs = 1);

/// Hop distance to the goal over (q, P) -> q' edges taken as unit-cost
/// directed edges; kUnreachable where no path exists.
std::vector<int> dist_to_goal(const PredecessorGraph& graph);

/// Successor states strictly closer to the goal (the progress set Q_{q,P});
/// empty when dist(q) is infinite or beyond the horizon.
std::vector<int> progress_set(const PredecessorGraph& graph, const std::vector<int>& dist, int q,
                              int p, int horizon);

/// Grid estimate of the measure of the subset of q that can step into the
/// progress set under some law of the partition.
double progress_measure(const StateSpace& space, const SystemModel& model, int q,
                        const ControllerPartition& partition, const std::vector<int>& progress,
                        int measure_grid, int law_grid);

struct Assignment {
  std::vector<int> dist;    // kUnreachable allowed
  std::vector<int> p_star;  // -1 where no partition applies (unsafe/goal/obstacle)
  /// Per-state ranking of candidate partitions, best first: (partition id,
  /// score). Live states score by progress measure, non-live states by safe
  /// successor count (as a fallback margin).
  std::vector<std::vector<std::pair<int, double>>> ranking;
  std::vector<char> live;  // dist finite and within horizon
};

Assignment assign_partitions(const PosteriorGraph& graph, const SafeSets& safe,
                             const PredecessorGraph& pred, const std::vector<int>& dist,
                             const StateSpace& space,
                             const std::vector<ControllerPartition>& partitions,
                             const SystemModel& model, const LivenessConfig& config, int jobs = 1);

}  // namespace cpwa

#endif  // CPWA_LIVENESS_HPP
