// Shared test fixtures: the five-state workspace used across the suites, plus
// seeded random generators for graphs, LPs, and training scenarios.

#ifndef CPWA_TESTS_FIXTURES_HPP
#define CPWA_TESTS_FIXTURES_HPP

#include <vector>

#include "cpwa/abstraction.hpp"
#include "cpwa/lp.hpp"
#include "cpwa/pipeline.hpp"
#include "cpwa/rng.hpp"

namespace fixtures {

// Five abstract states on a line (two partitions): the classic workspace with
// one state that is doomed under every partition. Layout (left to right):
//   obst = [-2,-1], qa = [-1,0], qb = [0,1], qc = [1,2], goal = [2,3]
// Expected outcome: qa is unsafe (both partitions reach the obstacle), qb is
// safe only under the "up" partition, qc under both; the up partition is the
// liveness choice for qb and qc.
struct LineWorld {
  cpwa::StateSpace space;
  std::vector<cpwa::ControllerPartition> partitions;
  cpwa::PosteriorGraph graph;
  cpwa::SystemModel model;
  // ids
  int qa, qb, qc, goal, obst;
  int up, down;  // partition ids
};

inline LineWorld make_line_world() {
  using namespace cpwa;
  LineWorld w;
  Eigen::VectorXd lo(1), hi(1);
  lo << -2.0;
  hi << 3.0;
  const Box bounds(lo, hi);
  PartitionScheme scheme;
  scheme.cuts = {{-1.0, 0.0, 1.0, 2.0}};
  Eigen::VectorXd glo(1), ghi(1);
  glo << 2.0;
  ghi << 3.0;
  Eigen::VectorXd olo(1), ohi(1);
  olo << -2.0;
  ohi << -1.0;
  w.space = StateSpace::build(bounds, scheme, Box(glo, ghi), {Box(olo, ohi)});
  // Normal cells in lexicographic order: [-1,0], [0,1], [1,2]; then goal, obst.
  w.qa = 0;
  w.qb = 1;
  w.qc = 2;
  w.goal = w.space.goal_id();
  w.obst = w.space.obstacle_ids().front();

  // One-dimensional single integrator x+ = x + u with u = Kx + b; partitions
  // pin K to zero and split the bias range at zero.
  w.model = SystemModel::integrator_chain(1, 1, 1.0);
  Eigen::VectorXd plo(2), phi(2);
  plo << 0.0, 0.0;
  phi << 0.0, 0.9;
  w.partitions.push_back({0, Box(plo, phi)});  // up: b in [0, 0.9]
  plo << 0.0, -0.9;
  phi << 0.0, 0.0;
  w.partitions.push_back({1, Box(plo, phi)});  // down: b in [-0.9, 0]
  w.up = 0;
  w.down = 1;

  // Hand-specified post boxes reproducing the intended transition structure
  // (the posts deliberately differ from the integrator's true images; the
  // model only drives the predecessor phase).
  auto interval = [](double a, double b) {
    Eigen::VectorXd l(1), h(1);
    l << a;
    h << b;
    return Box(l, h);
  };
  std::vector<std::vector<Box>> posts(w.space.num_states());
  posts[w.qa] = {interval(-1.8, -1.1), interval(-1.8, -1.1)};  // both -> obst
  posts[w.qb] = {interval(1.05, 1.9), interval(-1.5, -1.2)};   // up -> qc, down -> obst
  posts[w.qc] = {interval(2.1, 2.9), interval(0.1, 0.9)};      // up -> goal, down -> qb
  w.graph = posterior_graph_from_posts(w.space, w.partitions, posts);
  return w;
}

// Unit-box partitions usable wherever only ids matter.
inline std::vector<cpwa::ControllerPartition> dummy_partitions(int count) {
  std::vector<cpwa::ControllerPartition> out;
  Eigen::VectorXd lo(2), hi(2);
  for (int i = 0; i < count; ++i) {
    lo << 0.0, static_cast<double>(i);
    hi << 0.0, static_cast<double>(i + 1);
    out.push_back({i, cpwa::Box(lo, hi)});
  }
  return out;
}

// Random posterior graphs for the fixpoint oracle: a goal, one or two
// obstacles, and normal states each with 1..3 successors per partition.
inline cpwa::PosteriorGraph random_graph(cpwa::Rng& rng, int num_states, int num_partitions) {
  using namespace cpwa;
  std::vector<AbstractState> states;
  Eigen::VectorXd lo(1), hi(1);
  for (int i = 0; i < num_states; ++i) {
    lo << static_cast<double>(i);
    hi << static_cast<double>(i + 1);
    states.push_back({i, Box(lo, hi), StateKind::Normal});
  }
  states[0].kind = StateKind::Goal;
  states[1].kind = StateKind::Obstacle;
  if (num_states > 4 && rng.below(2) == 0) states[2].kind = StateKind::Obstacle;

  std::vector<std::vector<std::vector<int>>> edges(
      num_states, std::vector<std::vector<int>>(num_partitions));
  for (int q = 0; q < num_states; ++q) {
    if (states[q].kind != StateKind::Normal) continue;
    for (int p = 0; p < num_partitions; ++p) {
      const int fan = 1 + rng.below(3);
      for (int e = 0; e < fan; ++e) edges[q][p].push_back(rng.below(num_states));
    }
  }
  return posterior_graph_from_edges(std::move(states), dummy_partitions(num_partitions),
                                    std::move(edges));
}

// Random bounded-feasible-or-infeasible LPs: every variable gets finite box
// bounds so the vertex oracle is exact.
inline cpwa::LpProblem random_lp(cpwa::Rng& rng) {
  const int n = 2 + rng.below(3);           // 2..4 variables
  const int rows = 2 + rng.below(7);        // 2..8 constraints
  cpwa::LpProblem lp(n);
  for (int i = 0; i < n; ++i) {
    lp.objective[i] = rng.uniform(-2.0, 2.0);
    lp.set_bounds(i, -5.0, 5.0);
  }
  for (int r = 0; r < rows; ++r) {
    Eigen::VectorXd a(n);
    for (int i = 0; i < n; ++i) a[i] = rng.uniform(-1.0, 1.0);
    lp.add_le(a, rng.uniform(-1.0, 3.0));
  }
  return lp;
}

// Random (q, partition) training scenario guaranteed projection-feasible: the
// gain bounds straddle zero, so the zero output layer is always admissible.
struct TrainScenario {
  cpwa::SystemModel model;
  cpwa::Box q;
  cpwa::ControllerPartition partition;
  cpwa::Box goal;
};

inline TrainScenario make_train_scenario(cpwa::Rng& rng, bool unicycle) {
  using namespace cpwa;
  TrainScenario s;
  if (unicycle) {
    s.model = SystemModel::unicycle(1.0, 0.1);
  } else {
    s.model = SystemModel::integrator_chain(2, 1, 0.5);
  }
  const int n = s.model.n;
  const int m = s.model.m;
  Eigen::VectorXd qlo(n), qhi(n);
  for (int i = 0; i < n; ++i) {
    qlo[i] = rng.uniform(-1.0, 0.5);
    qhi[i] = qlo[i] + rng.uniform(0.2, 1.0);
  }
  s.q = Box(qlo, qhi);
  const int d = m * (n + 1);
  Eigen::VectorXd plo(d), phi(d);
  for (int i = 0; i < d; ++i) {
    plo[i] = -rng.uniform(0.05, 0.6);
    phi[i] = rng.uniform(0.05, 0.6);
  }
  s.partition = {0, Box(plo, phi)};
  Eigen::VectorXd glo(n), ghi(n);
  for (int i = 0; i < n; ++i) {
    glo[i] = qhi[i] + 0.5;
    ghi[i] = qhi[i] + 1.0;
  }
  s.goal = Box(glo, ghi);
  return s;
}

// Desk-scale unicycle reach-avoid workspace shared by the pipeline tests and
// the acceptance suite: a cylindrical track (the lateral axis is periodic,
// like a racing loop) with a goal strip at the far end and an obstacle block
// on the way. Driving left dead-ends at the rear wall, so roughly the
// forward-facing half of the heading cells ends up safe.
inline cpwa::WorkspaceSpec desk_unicycle_spec() {
  using namespace cpwa;
  WorkspaceSpec spec;
  spec.name = "unicycle-track";
  Eigen::VectorXd lo(3), hi(3);
  lo << 0.0, 0.0, 0.0;
  hi << 1.2, 1.2, 2.0 * M_PI;
  spec.state_bounds = Box(lo, hi);
  // Forward cells 0.08 (below the 0.0924 minimum per-step advance of the
  // straight heading cells, so goal entry is certifiable), lateral cells
  // 0.12; heading cut at pi/8 + k*pi/4 so straight headings sit at cell
  // centers (9 heading cells; the two seam cells are the halves of the
  // straight-ahead cell).
  spec.state_partition.cuts.resize(3);
  for (int k = 1; k <= 12; ++k) spec.state_partition.cuts[0].push_back(0.08 * k);
  for (int k = 1; k <= 9; ++k) spec.state_partition.cuts[1].push_back(0.12 * k);
  for (int k = 0; k < 8; ++k)
    spec.state_partition.cuts[2].push_back(M_PI / 8.0 + k * M_PI / 4.0);
  spec.circular_axes = {1, 2};
  Eigen::VectorXd glo(3), ghi(3);
  glo << 0.96, 0.0, 0.0;
  ghi << 1.2, 1.2, 2.0 * M_PI;
  spec.goal = Box(glo, ghi);
  Eigen::VectorXd olo(3), ohi(3);
  olo << 0.32, 0.48, 0.0;
  ohi << 0.40, 0.84, 2.0 * M_PI;
  spec.obstacles = {Box(olo, ohi)};

  Eigen::VectorXd clo(4), chi(4);
  clo << -0.03, -0.03, -0.005, -6.0;
  chi << 0.03, 0.03, 0.005, 6.0;
  spec.controller_bounds = Box(clo, chi);
  spec.controller_counts = {1, 1, 1, 16};

  spec.model_kind = ModelKind::Unicycle;
  spec.speed = 1.0;
  spec.dt = 0.1;
  Eigen::VectorXd wlo(3), whi(3);
  wlo << -0.004, -0.004, -0.004;
  whi << 0.004, 0.004, 0.004;
  spec.disturbance = Box(wlo, whi);

  spec.horizon = 300;
  spec.training.hidden_width = 4;
  spec.training.epochs = 300;
  spec.training.lr = 0.1;
  spec.training.max_iter = 1;
  spec.training.samples = 120;
  spec.retrain_attempts = 2;
  spec.sampling.state_grid = 3;
  spec.sampling.law_grid = 3;
  spec.sampling.measure_grid = 6;
  spec.seed = 20240817;
  return spec;
}

}  // namespace fixtures

#endif  // CPWA_TESTS_FIXTURES_HPP
