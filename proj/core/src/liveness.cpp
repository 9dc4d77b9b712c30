#include "cpwa/liveness.hpp"

#include <algorithm>
#include <deque>
#include <map>
#include <stdexcept>

#include "cpwa/parallel.hpp"

namespace cpwa {

std::vector<int> PredecessorGraph::successors(int q, int p) const {
  std::vector<int> out;
  out.reserve(edges[q][p].size());
  for (const PredEdge& e : edges[q][p]) out.push_back(e.target);
  return out;
}

const PredEdge* PredecessorGraph::find_edge(int q, int p, int target) const {
  for (const PredEdge& e : edges[q][p])
    if (e.target == target) return &e;
  return nullptr;
}

namespace {

// Uniform grid over a box, endpoints included, lexicographic order.
std::vector<Eigen::VectorXd> box_grid(const Box& b, int per_axis) {
  const int n = b.dim();
  std::vector<Eigen::VectorXd> out;
  std::vector<int> odo(n, 0);
  for (;;) {
    Eigen::VectorXd x(n);
    for (int i = 0; i < n; ++i) {
      const double t = per_axis == 1 ? 0.5 : static_cast<double>(odo[i]) / (per_axis - 1);
      x[i] = b.lo[i] + t * (b.hi[i] - b.lo[i]);
    }
    out.push_back(std::move(x));
    int pos = n - 1;
    while (pos >= 0 && odo[pos] == per_axis - 1) odo[pos--] = 0;
    if (pos < 0) break;
    ++odo[pos];
  }
  return out;
}

}  // namespace

PredecessorGraph build_predecessor_graph(const SafeSets& safe, const StateSpace& space,
                                         const std::vector<ControllerPartition>& partitions,
                                         const SystemModel& model, const LivenessConfig& config,
                                         int jobs) {
  if (config.state_grid < 1 || config.law_grid < 2)
    throw std::invalid_argument("build_predecessor_graph: grid resolutions too small");

  PredecessorGraph graph;
  graph.num_states = space.num_states();
  graph.goal_id = space.goal_id();
  graph.edges.assign(graph.num_states,
                     std::vector<std::vector<PredEdge>>(partitions.size()));

  std::vector<char> target_ok(graph.num_states, 0);
  for (int q : safe.x_safe)
    if (q < graph.num_states) target_ok[q] = 1;  // x_safe already contains the goal

  std::vector<int> sources;
  for (int q : safe.x_safe)
    if (q < graph.num_states && space.state(q).kind == StateKind::Normal) sources.push_back(q);

  std::vector<std::vector<Eigen::VectorXd>> grids(partitions.size());
  for (std::size_t p = 0; p < partitions.size(); ++p)
    grids[p] = law_grid(partitions[p], config.law_grid);

  parallel_for(static_cast<int>(sources.size()), jobs, [&](int si) {
    const int q = sources[si];
    const std::vector<Eigen::VectorXd> xs = box_grid(space.state(q).region, config.state_grid);
    for (int p : safe.p_safe[q]) {
      std::map<int, PredEdge> found;
      for (const Eigen::VectorXd& x : xs) {
        for (const Eigen::VectorXd& flat : grids[p]) {
          const AffineLaw law = unflatten_law(flat, model.n, model.m);
          const Eigen::VectorXd y = step(model, x, law.apply(x));
          for (int target : space.states_containing(y)) {
            if (!target_ok[target] || found.count(target)) continue;
            found[target] = PredEdge{target, x, flat};
          }
        }
      }
      auto& out = graph.edges[q][p];
      out.reserve(found.size());
      for (auto& [target, edge] : found) out.push_back(std::move(edge));
    }
  });
  return graph;
}

std::vector<int> dist_to_goal(const PredecessorGraph& graph) {
  // Reverse adjacency, then BFS from the goal.
  std::vector<std::vector<int>> rev(graph.num_states);
  for (int q = 0; q < graph.num_states; ++q)
    for (const auto& per_partition : graph.edges[q])
      for (const PredEdge& e : per_partition) rev[e.target].push_back(q);

  std::vector<int> dist(graph.num_states, kUnreachable);
  if (graph.goal_id < 0) return dist;
  std::deque<int> queue{graph.goal_id};
  dist[graph.goal_id] = 0;
  while (!queue.empty()) {
    const int v = queue.front();
    queue.pop_front();
    for (int u : rev[v]) {
      if (dist[u] == kUnreachable) {
        dist[u] = dist[v] + 1;
        queue.push_back(u);
      }
    }
  }
  return dist;
}

std::vector<int> progress_set(const PredecessorGraph& graph, const std::vector<int>& dist, int q,
                              int p, int horizon) {
  std::vector<int> out;
  if (dist[q] == kUnreachable || dist[q] > horizon) return out;
  for (const PredEdge& e : graph.edges[q][p])
    if (dist[e.target] != kUnreachable && dist[e.target] < dist[q]) out.push_back(e.target);
  std::sort(out.begin(), out.end());
  return out;
}

double progress_measure(const StateSpace& space, const SystemModel& model, int q,
                        const ControllerPartition& partition, const std::vector<int>& progress,
                        int measure_grid, int law_grid_res) {
  if (progress.empty()) return 0.0;
  const Box& region = space.state(q).region;
  const std::vector<Eigen::VectorXd> xs = box_grid(region, measure_grid);
  const std::vector<Eigen::VectorXd> laws = law_grid(partition, law_grid_res);
  int hits = 0;
  for (const Eigen::VectorXd& x : xs) {
    bool hit = false;
    for (const Eigen::VectorXd& flat : laws) {
      const AffineLaw law = unflatten_law(flat, model.n, model.m);
      const Eigen::VectorXd y = step(model, x, law.apply(x));
      for (int id : space.states_containing(y)) {
        if (std::binary_search(progress.begin(), progress.end(), id)) {
          hit = true;
          break;
        }
      }
      if (hit) break;
    }
    if (hit) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(xs.size()) * measure(region);
}

Assignment assign_partitions(const PosteriorGraph& graph, const SafeSets& safe,
                             const PredecessorGraph& pred, const std::vector<int>& dist,
                             const StateSpace& space,
                             const std::vector<ControllerPartition>& partitions,
                             const SystemModel& model, const LivenessConfig& config, int jobs) {
  Assignment out;
  out.dist = dist;
  out.p_star.assign(space.num_states(), -1);
  out.ranking.assign(space.num_states(), {});
  out.live.assign(space.num_states(), 0);

  std::vector<int> targets;
  for (int q : safe.x_safe)
    if (q < space.num_states() && space.state(q).kind == StateKind::Normal) targets.push_back(q);

  parallel_for(static_cast<int>(targets.size()), jobs, [&](int ti) {
    const int q = targets[ti];
    const bool live = dist[q] != kUnreachable && dist[q] <= config.horizon;
    out.live[q] = live ? 1 : 0;
    std::vector<std::pair<int, double>> scored;
    for (int p : safe.p_safe[q]) {
      double score = 0.0;
      if (live) {
        const std::vector<int> progress = progress_set(pred, dist, q, p, config.horizon);
        score = progress_measure(space, model, q, partitions[p], progress, config.measure_grid,
                                 config.law_grid);
      } else {
        // Safety-only fallback: prefer the partition with the most safe
        // successors in the posterior graph.
        score = static_cast<double>(graph.next(q, p).size());
      }
      scored.emplace_back(p, score);
    }
    std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
      if (a.second != b.second) return a.second > b.second;
      return a.first < b.first;
    });
    out.ranking[q] = scored;
    if (!scored.empty()) out.p_star[q] = scored.front().first;
  });
  return out;
}

}  // namespace cpwa
