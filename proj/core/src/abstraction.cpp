#include "cpwa/abstraction.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <stdexcept>

#include "cpwa/parallel.hpp"

namespace cpwa {

namespace {
constexpr double kAlignTol = 1e-9;
}

std::string to_string(StateKind kind) {
  switch (kind) {
    case StateKind::Normal: return "normal";
    case StateKind::Goal: return "goal";
    case StateKind::Obstacle: return "obstacle";
  }
  return "unknown";
}

PartitionScheme PartitionScheme::uniform(const Box& bounds, const std::vector<int>& cells_per_axis) {
  if (static_cast<int>(cells_per_axis.size()) != bounds.dim())
    throw std::invalid_argument("PartitionScheme::uniform: counts/bounds dimension mismatch");
  PartitionScheme scheme;
  scheme.cuts.resize(bounds.dim());
  for (int axis = 0; axis < bounds.dim(); ++axis) {
    const int cells = cells_per_axis[axis];
    if (cells < 1) throw std::invalid_argument("PartitionScheme::uniform: cell count must be >= 1");
    for (int k = 1; k < cells; ++k)
      scheme.cuts[axis].push_back(bounds.lo[axis] +
                                  bounds.width(axis) * static_cast<double>(k) / cells);
  }
  return scheme;
}

namespace {

bool on_grid(double value, const std::vector<double>& lines) {
  for (double line : lines)
    if (std::abs(value - line) <= kAlignTol) return true;
  return false;
}

}  // namespace

StateSpace StateSpace::build(const Box& bounds, const PartitionScheme& scheme, const Box& goal,
                             const std::vector<Box>& obstacles, std::vector<int> circular_axes) {
  const int n = bounds.dim();
  if (static_cast<int>(scheme.cuts.size()) != n)
    throw std::invalid_argument("StateSpace: scheme dimension mismatch");
  if (goal.dim() != n) throw std::invalid_argument("StateSpace: goal dimension mismatch");

  StateSpace space;
  space.bounds_ = bounds;
  space.circular_ = std::move(circular_axes);
  for (int axis : space.circular_)
    if (axis < 0 || axis >= n) throw std::invalid_argument("StateSpace: bad circular axis index");

  space.lines_.resize(n);
  for (int axis = 0; axis < n; ++axis) {
    auto& lines = space.lines_[axis];
    lines.push_back(bounds.lo[axis]);
    double prev = bounds.lo[axis];
    for (double cut : scheme.cuts[axis]) {
      if (cut <= prev + kAlignTol || cut >= bounds.hi[axis] - kAlignTol)
        throw std::invalid_argument("StateSpace: cuts must be strictly increasing inside bounds");
      lines.push_back(cut);
      prev = cut;
    }
    lines.push_back(bounds.hi[axis]);
  }

  // Special regions must sit inside the bounds with faces on grid lines; the
  // build refuses to silently shrink or grow them.
  auto check_aligned = [&](const Box& b, const std::string& name) {
    if (b.dim() != n) throw std::invalid_argument("StateSpace: " + name + " dimension mismatch");
    for (int axis = 0; axis < n; ++axis) {
      if (b.lo[axis] < bounds.lo[axis] - kAlignTol || b.hi[axis] > bounds.hi[axis] + kAlignTol)
        throw std::invalid_argument("StateSpace: " + name + " leaves the state bounds on axis " +
                                    std::to_string(axis));
      for (double face : {b.lo[axis], b.hi[axis]}) {
        if (!on_grid(face, space.lines_[axis])) {
          std::ostringstream msg;
          msg << "StateSpace: " << name << " face " << face << " on axis " << axis
              << " is not aligned with any cut plane";
          throw std::invalid_argument(msg.str());
        }
      }
    }
  };
  check_aligned(goal, "goal");
  for (std::size_t i = 0; i < obstacles.size(); ++i)
    check_aligned(obstacles[i], "obstacle " + std::to_string(i));

  std::vector<int> cells_per_axis(n);
  space.strides_.assign(n, 1);
  int total_cells = 1;
  for (int axis = 0; axis < n; ++axis) {
    cells_per_axis[axis] = static_cast<int>(space.lines_[axis].size()) - 1;
    total_cells *= cells_per_axis[axis];
  }
  for (int axis = n - 2; axis >= 0; --axis)
    space.strides_[axis] = space.strides_[axis + 1] * cells_per_axis[axis + 1];

  // First pass: classify cells; Normal cells get ids in lexicographic order.
  space.cell_state_.assign(total_cells, -1);
  std::vector<int> cell(n, 0);
  std::vector<int> goal_cells, normal_cells;
  std::vector<std::vector<int>> obstacle_cells(obstacles.size());
  for (int flat = 0; flat < total_cells; ++flat) {
    Eigen::VectorXd lo(n), hi(n);
    for (int axis = 0; axis < n; ++axis) {
      lo[axis] = space.lines_[axis][cell[axis]];
      hi[axis] = space.lines_[axis][cell[axis] + 1];
    }
    const Box cell_box(lo, hi);
    bool special = false;
    if (goal.contains(cell_box, kAlignTol)) {
      goal_cells.push_back(flat);
      special = true;
    } else {
      for (std::size_t i = 0; i < obstacles.size(); ++i) {
        if (obstacles[i].contains(cell_box, kAlignTol)) {
          obstacle_cells[i].push_back(flat);
          special = true;
          break;
        }
      }
    }
    if (!special) normal_cells.push_back(flat);

    int axis = n - 1;
    while (axis >= 0 && cell[axis] == cells_per_axis[axis] - 1) cell[axis--] = 0;
    if (axis >= 0) ++cell[axis];
  }
  if (goal_cells.empty()) throw std::invalid_argument("StateSpace: goal covers no cell");
  for (std::size_t i = 0; i < obstacles.size(); ++i)
    if (obstacle_cells[i].empty())
      throw std::invalid_argument("StateSpace: obstacle " + std::to_string(i) + " covers no cell");

  auto cell_box_of = [&](int flat) {
    Eigen::VectorXd lo(n), hi(n);
    int rest = flat;
    for (int axis = 0; axis < n; ++axis) {
      const int idx = rest / space.strides_[axis];
      rest %= space.strides_[axis];
      lo[axis] = space.lines_[axis][idx];
      hi[axis] = space.lines_[axis][idx + 1];
    }
    return Box(lo, hi);
  };

  for (int flat : normal_cells) {
    const int id = static_cast<int>(space.states_.size());
    space.states_.push_back({id, cell_box_of(flat), StateKind::Normal});
    space.cell_state_[flat] = id;
  }
  space.goal_id_ = static_cast<int>(space.states_.size());
  space.states_.push_back({space.goal_id_, goal, StateKind::Goal});
  for (int flat : goal_cells) space.cell_state_[flat] = space.goal_id_;
  for (std::size_t i = 0; i < obstacles.size(); ++i) {
    const int id = static_cast<int>(space.states_.size());
    space.obstacle_ids_.push_back(id);
    space.states_.push_back({id, obstacles[i], StateKind::Obstacle});
    for (int flat : obstacle_cells[i]) space.cell_state_[flat] = id;
  }
  return space;
}

StateSpace partition_state_space(const Box& bounds, const PartitionScheme& scheme, const Box& goal,
                                 const std::vector<Box>& obstacles, std::vector<int> circular_axes) {
  return StateSpace::build(bounds, scheme, goal, obstacles, std::move(circular_axes));
}

int StateSpace::flat_index(const std::vector<int>& cell) const {
  int flat = 0;
  for (std::size_t axis = 0; axis < cell.size(); ++axis) flat += cell[axis] * strides_[axis];
  return flat;
}

Eigen::VectorXd StateSpace::wrap(const Eigen::VectorXd& x) const {
  return wrap_point(x, bounds_, circular_);
}

std::vector<Box> StateSpace::wrap_pieces(const Box& b) const {
  return wrap_box(b, bounds_, circular_);
}

std::vector<int> StateSpace::states_containing(const Eigen::VectorXd& x) const {
  const Eigen::VectorXd y = wrap(x);
  const int n = bounds_.dim();
  std::vector<std::vector<int>> axis_cells(n);
  for (int axis = 0; axis < n; ++axis) {
    const auto& lines = lines_[axis];
    const double v = y[axis];
    if (v < lines.front() || v > lines.back()) return {};
    // Cells [lines[i], lines[i+1]] containing v; two when v sits on an
    // interior line.
    const auto it = std::upper_bound(lines.begin(), lines.end(), v);
    int idx = static_cast<int>(it - lines.begin()) - 1;
    if (idx >= static_cast<int>(lines.size()) - 1) idx = static_cast<int>(lines.size()) - 2;
    axis_cells[axis].push_back(idx);
    if (idx > 0 && v == lines[idx]) axis_cells[axis].push_back(idx - 1);
  }
  std::set<int> found;
  std::vector<int> pick(n, 0);
  for (;;) {
    std::vector<int> cell(n);
    for (int axis = 0; axis < n; ++axis) cell[axis] = axis_cells[axis][pick[axis]];
    found.insert(cell_state_[flat_index(cell)]);
    int axis = n - 1;
    while (axis >= 0 && pick[axis] == static_cast<int>(axis_cells[axis].size()) - 1)
      pick[axis--] = 0;
    if (axis < 0) break;
    ++pick[axis];
  }
  return std::vector<int>(found.begin(), found.end());
}

int StateSpace::state_at(const Eigen::VectorXd& x) const {
  const std::vector<int> ids = states_containing(x);
  return ids.empty() ? -1 : ids.front();
}

std::vector<int> StateSpace::states_intersecting(const Box& b) const {
  const int n = bounds_.dim();
  std::vector<std::pair<int, int>> ranges(n);  // [first, last] cell index per axis
  for (int axis = 0; axis < n; ++axis) {
    const auto& lines = lines_[axis];
    const int cells = static_cast<int>(lines.size()) - 1;
    if (b.hi[axis] < lines.front() || b.lo[axis] > lines.back()) return {};
    int first = 0;
    while (first < cells - 1 && lines[first + 1] < b.lo[axis]) ++first;
    int last = cells - 1;
    while (last > 0 && lines[last] > b.hi[axis]) --last;
    if (first > last) return {};
    ranges[axis] = {first, last};
  }
  std::set<int> found;
  std::vector<int> cell(n);
  for (int axis = 0; axis < n; ++axis) cell[axis] = ranges[axis].first;
  for (;;) {
    found.insert(cell_state_[flat_index(cell)]);
    int axis = n - 1;
    while (axis >= 0 && cell[axis] == ranges[axis].second) {
      cell[axis] = ranges[axis].first;
      --axis;
    }
    if (axis < 0) break;
    ++cell[axis];
  }
  return std::vector<int>(found.begin(), found.end());
}

std::vector<ControllerPartition> partition_controller_space(const Box& bounds,
                                                            const std::vector<int>& counts) {
  const int d = bounds.dim();
  if (static_cast<int>(counts.size()) != d)
    throw std::invalid_argument("partition_controller_space: counts dimension mismatch");
  for (int c : counts)
    if (c < 1) throw std::invalid_argument("partition_controller_space: counts must be >= 1");

  std::vector<ControllerPartition> out;
  std::vector<int> odo(d, 0);
  int id = 0;
  for (;;) {
    Eigen::VectorXd lo(d), hi(d);
    for (int axis = 0; axis < d; ++axis) {
      const double w = bounds.width(axis) / counts[axis];
      lo[axis] = bounds.lo[axis] + odo[axis] * w;
      hi[axis] = (odo[axis] == counts[axis] - 1) ? bounds.hi[axis] : lo[axis] + w;
    }
    out.push_back({id++, Box(lo, hi)});
    int axis = d - 1;
    while (axis >= 0 && odo[axis] == counts[axis] - 1) odo[axis--] = 0;
    if (axis < 0) break;
    ++odo[axis];
  }
  return out;
}

const std::vector<int>& PosteriorGraph::next(int q, int p) const {
  if (q < 0 || q >= num_states() || p < 0 || p >= num_partitions())
    throw std::invalid_argument("PosteriorGraph::next: unknown state or partition id");
  return edges[q][p];
}

const std::vector<int>& next_states(const PosteriorGraph& graph, int q, int p) {
  return graph.next(q, p);
}

namespace {

// Exceedances beyond this are real escapes; anything smaller is the outward
// rounding slack of interval_post touching the domain wall.
constexpr double kEscapeTol = 1e-9;

// Shared edge derivation: wrap the raw post box, route out-of-bounds mass to
// the synthetic sink, intersect in-bounds pieces with the tiling.
std::vector<int> edges_from_post(const StateSpace& space, const Box& raw_post, int oob_id) {
  std::set<int> succ;
  const Box& bounds = space.bounds();
  for (const Box& piece : space.wrap_pieces(raw_post)) {
    bool escapes = false;
    Eigen::VectorXd lo = piece.lo, hi = piece.hi;
    for (int axis = 0; axis < bounds.dim(); ++axis) {
      if (piece.lo[axis] < bounds.lo[axis] - kEscapeTol ||
          piece.hi[axis] > bounds.hi[axis] + kEscapeTol)
        escapes = true;
      lo[axis] = std::max(lo[axis], bounds.lo[axis]);
      hi[axis] = std::min(hi[axis], bounds.hi[axis]);
    }
    if (escapes) succ.insert(oob_id);
    bool non_empty = true;
    for (int axis = 0; axis < bounds.dim(); ++axis)
      if (lo[axis] > hi[axis]) non_empty = false;
    if (!non_empty) continue;
    for (int id : space.states_intersecting(Box(lo, hi))) succ.insert(id);
  }
  return std::vector<int>(succ.begin(), succ.end());
}

PosteriorGraph make_graph_shell(const StateSpace& space, std::vector<ControllerPartition> partitions) {
  PosteriorGraph graph;
  graph.states = space.states();
  graph.partitions = std::move(partitions);
  graph.out_of_bounds_id = static_cast<int>(graph.states.size());
  graph.states.push_back({graph.out_of_bounds_id, space.bounds(), StateKind::Obstacle});
  graph.edges.assign(graph.states.size(),
                     std::vector<std::vector<int>>(graph.partitions.size()));
  return graph;
}

}  // namespace

PosteriorGraph build_posterior_graph(const StateSpace& space,
                                     std::vector<ControllerPartition> partitions,
                                     const SystemModel& model, int jobs) {
  if (space.bounds().dim() != model.n)
    throw std::invalid_argument("build_posterior_graph: model/space dimension mismatch");
  PosteriorGraph graph = make_graph_shell(space, std::move(partitions));
  const int num_source = space.num_states();
  const int num_parts = graph.num_partitions();
  graph.posts.assign(graph.states.size(), std::vector<Box>(num_parts));
  graph.has_posts = true;

  parallel_for(num_source, jobs, [&](int q) {
    if (space.state(q).kind != StateKind::Normal) return;
    for (int p = 0; p < num_parts; ++p) {
      const Box post = interval_post(model, space.state(q).region, graph.partitions[p]);
      graph.posts[q][p] = post;
      graph.edges[q][p] = edges_from_post(space, post, graph.out_of_bounds_id);
    }
  });
  return graph;
}

PosteriorGraph posterior_graph_from_posts(const StateSpace& space,
                                          std::vector<ControllerPartition> partitions,
                                          const std::vector<std::vector<Box>>& posts) {
  PosteriorGraph graph = make_graph_shell(space, std::move(partitions));
  if (static_cast<int>(posts.size()) < space.num_states())
    throw std::invalid_argument("posterior_graph_from_posts: missing post rows");
  graph.posts.assign(graph.states.size(), std::vector<Box>(graph.num_partitions()));
  graph.has_posts = true;
  for (int q = 0; q < space.num_states(); ++q) {
    if (space.state(q).kind != StateKind::Normal) continue;
    if (static_cast<int>(posts[q].size()) != graph.num_partitions())
      throw std::invalid_argument("posterior_graph_from_posts: missing post for a partition");
    for (int p = 0; p < graph.num_partitions(); ++p) {
      graph.posts[q][p] = posts[q][p];
      graph.edges[q][p] = edges_from_post(space, posts[q][p], graph.out_of_bounds_id);
    }
  }
  return graph;
}

PosteriorGraph posterior_graph_from_edges(std::vector<AbstractState> states,
                                          std::vector<ControllerPartition> partitions,
                                          std::vector<std::vector<std::vector<int>>> edges) {
  PosteriorGraph graph;
  graph.states = std::move(states);
  graph.partitions = std::move(partitions);
  graph.edges = std::move(edges);
  if (graph.edges.size() != graph.states.size())
    throw std::invalid_argument("posterior_graph_from_edges: edge table size mismatch");
  for (std::size_t q = 0; q < graph.states.size(); ++q) {
    if (graph.edges[q].size() != graph.partitions.size())
      throw std::invalid_argument("posterior_graph_from_edges: edge table size mismatch");
    for (auto& succs : graph.edges[q]) {
      if (graph.states[q].kind != StateKind::Normal && !succs.empty())
        throw std::invalid_argument(
            "posterior_graph_from_edges: goal/obstacle states cannot have outgoing edges");
      std::sort(succs.begin(), succs.end());
      succs.erase(std::unique(succs.begin(), succs.end()), succs.end());
      for (int s : succs)
        if (s < 0 || s >= static_cast<int>(graph.states.size()))
          throw std::invalid_argument("posterior_graph_from_edges: successor id out of range");
    }
  }
  return graph;
}

SafeSets compute_unsafe_fixpoint(const PosteriorGraph& graph) {
  const int num_states = graph.num_states();
  const int num_parts = graph.num_partitions();

  // Predecessor adjacency: for each state, the (q, p) edges that contain it.
  std::vector<std::vector<std::pair<int, int>>> preds(num_states);
  for (int q = 0; q < num_states; ++q)
    for (int p = 0; p < num_parts; ++p)
      for (int succ : graph.edges[q][p]) preds[succ].emplace_back(q, p);

  std::vector<char> unsafe(num_states, 0);
  std::vector<std::vector<char>> edge_hit(num_states, std::vector<char>(num_parts, 0));
  std::vector<int> hit_count(num_states, 0);

  std::vector<int> frontier;
  for (int q = 0; q < num_states; ++q) {
    if (graph.states[q].kind == StateKind::Obstacle) {
      unsafe[q] = 1;
      frontier.push_back(q);
    }
  }

  int iterations = 0;
  while (true) {
    std::vector<int> next_frontier;
    for (int u : frontier) {
      for (const auto& [q, p] : preds[u]) {
        if (unsafe[q] || edge_hit[q][p]) continue;
        edge_hit[q][p] = 1;
        if (++hit_count[q] == num_parts && graph.states[q].kind == StateKind::Normal) {
          unsafe[q] = 1;
          next_frontier.push_back(q);
        }
      }
    }
    ++iterations;
    if (next_frontier.empty()) break;
    std::sort(next_frontier.begin(), next_frontier.end());
    frontier = std::move(next_frontier);
  }

  SafeSets out;
  out.iterations = iterations;
  out.unsafe_mask.assign(unsafe.begin(), unsafe.end());
  for (int q = 0; q < num_states; ++q)
    (unsafe[q] ? out.x_unsafe : out.x_safe).push_back(q);

  out.p_safe.assign(num_states, {});
  for (int q : out.x_safe) {
    for (int p = 0; p < num_parts; ++p) {
      // Goal is terminal (no successors by construction): every partition is
      // vacuously safe there. For normal states an empty successor set means
      // the transition does not exist in the graph, so it cannot back a
      // safety claim.
      if (graph.states[q].kind == StateKind::Normal && graph.edges[q][p].empty()) continue;
      bool all_safe = true;
      for (int succ : graph.edges[q][p]) {
        if (unsafe[succ]) {
          all_safe = false;
          break;
        }
      }
      if (all_safe) out.p_safe[q].push_back(p);
    }
  }
  return out;
}

std::vector<int> initial_states(const PosteriorGraph& graph, const SafeSets& safe) {
  std::vector<int> out;
  for (int q : safe.x_safe)
    if (graph.states[q].kind == StateKind::Normal) out.push_back(q);
  return out;
}

}  // namespace cpwa
