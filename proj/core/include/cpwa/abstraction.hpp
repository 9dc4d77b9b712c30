#ifndef CPWA_ABSTRACTION_HPP
#define CPWA_ABSTRACTION_HPP

#include <string>
#include <vector>

#include "cpwa/dynamics.hpp"
#include "cpwa/geometry.hpp"

namespace cpwa {

enum class StateKind { Normal, Goal, Obstacle };

std::string to_string(StateKind kind);

struct AbstractState {
  int id = -1;
  Box region;
  StateKind kind = StateKind::Normal;
};

/// Interior cut positions per axis (strictly increasing, strictly inside the
/// bounds). Together with the bounds they induce the cell grid.
struct PartitionScheme {
  std::vector<std::vector<double>> cuts;

  static PartitionScheme uniform(const Box& bounds, const std::vector<int>& cells_per_axis);
};

/// The tiled state space: cells between consecutive grid lines, with cells
/// inside the goal box absorbed into a single Goal state and cells inside
/// each obstacle box absorbed into one Obstacle state per obstacle. Normal
/// states get ids 0.. in lexicographic cell order, then the goal, then the
/// obstacles. Circular axes make the tiling periodic: boxes and points are
/// wrapped into bounds before location queries.
class StateSpace {
 public:
  static StateSpace build(const Box& bounds, const PartitionScheme& scheme, const Box& goal,
                          const std::vector<Box>& obstacles, std::vector<int> circular_axes = {});

  const Box& bounds() const { return bounds_; }
  const std::vector<AbstractState>& states() const { return states_; }
  const AbstractState& state(int id) const { return states_.at(id); }
  int num_states() const { return static_cast<int>(states_.size()); }
  int goal_id() const { return goal_id_; }
  const std::vector<int>& obstacle_ids() const { return obstacle_ids_; }
  const std::vector<int>& circular_axes() const { return circular_; }
  /// Grid lines per axis, endpoints included.
  const std::vector<std::vector<double>>& grid_lines() const { return lines_; }

  Eigen::VectorXd wrap(const Eigen::VectorXd& x) const;
  std::vector<Box> wrap_pieces(const Box& b) const;

  /// All states whose region contains the wrapped point (several on shared
  /// faces); empty if outside the bounds.
  std::vector<int> states_containing(const Eigen::VectorXd& x) const;
  /// Lowest-id state containing the wrapped point, or -1.
  int state_at(const Eigen::VectorXd& x) const;
  /// States whose region intersects the (already in-bounds) box, closed
  /// semantics, sorted ids.
  std::vector<int> states_intersecting(const Box& b) const;

 private:
  Box bounds_;
  std::vector<std::vector<double>> lines_;
  std::vector<int> circular_;
  std::vector<AbstractState> states_;
  std::vector<int> cell_state_;  // flat cell index -> state id
  std::vector<int> strides_;
  int goal_id_ = -1;
  std::vector<int> obstacle_ids_;

  int flat_index(const std::vector<int>& cell) const;
};

/// Spec-facing constructor name for the tiling.
StateSpace partition_state_space(const Box& bounds, const PartitionScheme& scheme, const Box& goal,
                                 const std::vector<Box>& obstacles,
                                 std::vector<int> circular_axes = {});

/// Uniform grid of controller partitions over the parameter box, ids in
/// lexicographic order.
std::vector<ControllerPartition> partition_controller_space(const Box& bounds,
                                                            const std::vector<int>& counts);

/// Finite transition system over abstract states, edges labeled by controller
/// partitions. Goal and obstacle states have no outgoing edges. A post box
/// escaping the declared bounds (on a non-circular axis) adds an edge to a
/// synthetic out-of-bounds state that behaves like an obstacle.
struct PosteriorGraph {
  std::vector<AbstractState> states;
  std::vector<ControllerPartition> partitions;
  int out_of_bounds_id = -1;
  /// edges[q][p] = sorted successor ids.
  std::vector<std::vector<std::vector<int>>> edges;
  /// Cached raw (unwrapped) post boxes; empty when edges were hand-encoded.
  std::vector<std::vector<Box>> posts;
  bool has_posts = false;

  int num_states() const { return static_cast<int>(states.size()); }
  int num_partitions() const { return static_cast<int>(partitions.size()); }
  const std::vector<int>& next(int q, int p) const;
};

PosteriorGraph build_posterior_graph(const StateSpace& space,
                                     std::vector<ControllerPartition> partitions,
                                     const SystemModel& model, int jobs = 1);

/// Builds the graph from externally supplied post boxes (posts[q][p]); edges
/// are derived by the same wrap + intersection rule as the model-driven path.
PosteriorGraph posterior_graph_from_posts(const StateSpace& space,
                                          std::vector<ControllerPartition> partitions,
                                          const std::vector<std::vector<Box>>& posts);

/// Fully hand-encoded graph; rejects edges leaving goal or obstacle states.
PosteriorGraph posterior_graph_from_edges(std::vector<AbstractState> states,
                                          std::vector<ControllerPartition> partitions,
                                          std::vector<std::vector<std::vector<int>>> edges);

const std::vector<int>& next_states(const PosteriorGraph& graph, int q, int p);

struct SafeSets {
  std::vector<int> x_unsafe;  // sorted
  std::vector<int> x_safe;    // sorted; complement of x_unsafe
  /// p_safe[q] = sorted partitions with Next(q, P) inside the safe set;
  /// populated for safe states only.
  std::vector<std::vector<int>> p_safe;
  int iterations = 0;  // k* of the backtracking recursion

  bool is_safe(int id) const { return unsafe_mask.empty() ? false : !unsafe_mask[id]; }
  std::vector<char> unsafe_mask;
};

/// Backward fixpoint from the obstacle states: X^k accumulates every state
/// all of whose partitions can reach X^{k-1}, until stable. Implemented as a
/// worklist over predecessor adjacency, processed in rounds so the reported
/// iteration count matches the textbook recursion.
SafeSets compute_unsafe_fixpoint(const PosteriorGraph& graph);

/// Safe Normal states (the support of X_init).
std::vector<int> initial_states(const PosteriorGraph& graph, const SafeSets& safe);

}  // namespace cpwa

#endif  // CPWA_ABSTRACTION_HPP
