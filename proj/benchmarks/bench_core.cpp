#include <benchmark/benchmark.h>

#include <cmath>

#include "cpwa/liveness.hpp"
#include "cpwa/lp.hpp"
#include "cpwa/neural.hpp"
#include "cpwa/rng.hpp"

using namespace cpwa;

namespace {

Box cube(int n, double lo, double hi) {
  return Box(Eigen::VectorXd::Constant(n, lo), Eigen::VectorXd::Constant(n, hi));
}

StateSpace track_space(int forward_cells, int lateral_cells) {
  Eigen::VectorXd lo(3), hi(3);
  lo << 0, 0, 0;
  hi << 1.2, 1.2, 2 * M_PI;
  PartitionScheme scheme;
  scheme.cuts.resize(3);
  const double fw = 0.96 / forward_cells;
  for (int k = 1; k <= forward_cells; ++k) scheme.cuts[0].push_back(fw * k);
  for (int k = 1; k < lateral_cells; ++k) scheme.cuts[1].push_back(1.2 * k / lateral_cells);
  for (int k = 0; k < 8; ++k) scheme.cuts[2].push_back(M_PI / 8 + k * M_PI / 4);
  Eigen::VectorXd glo(3), ghi(3);
  glo << 0.96, 0, 0;
  ghi << 1.2, 1.2, 2 * M_PI;
  return StateSpace::build(Box(lo, hi), scheme, Box(glo, ghi), {}, {1, 2});
}

std::vector<ControllerPartition> track_partitions(int bands) {
  Eigen::VectorXd lo(4), hi(4);
  lo << -0.03, -0.03, -0.005, -6;
  hi << 0.03, 0.03, 0.005, 6;
  return partition_controller_space(Box(lo, hi), {1, 1, 1, bands});
}

void BM_IntervalPost(benchmark::State& state) {
  const SystemModel model = SystemModel::unicycle(1.0, 0.1);
  const Box q = cube(3, 0.2, 0.4);
  const ControllerPartition p{0, cube(4, -0.5, 0.5)};
  for (auto _ : state) benchmark::DoNotOptimize(interval_post(model, q, p));
}
BENCHMARK(BM_IntervalPost);

void BM_PosteriorGraph(benchmark::State& state) {
  const StateSpace space = track_space(static_cast<int>(state.range(0)), 10);
  const auto partitions = track_partitions(16);
  const SystemModel model = SystemModel::unicycle(1.0, 0.1);
  for (auto _ : state)
    benchmark::DoNotOptimize(build_posterior_graph(space, partitions, model));
  state.SetComplexityN(space.num_states());
}
BENCHMARK(BM_PosteriorGraph)->Arg(6)->Arg(12)->Complexity(benchmark::oN);

void BM_UnsafeFixpoint(benchmark::State& state) {
  const StateSpace space = track_space(12, 10);
  const auto partitions = track_partitions(16);
  const SystemModel model = SystemModel::unicycle(1.0, 0.1);
  const PosteriorGraph graph = build_posterior_graph(space, partitions, model);
  for (auto _ : state) benchmark::DoNotOptimize(compute_unsafe_fixpoint(graph));
}
BENCHMARK(BM_UnsafeFixpoint);

void BM_SolveLp(benchmark::State& state) {
  Rng rng(1);
  const int n = static_cast<int>(state.range(0));
  LpProblem lp(n);
  for (int i = 0; i < n; ++i) {
    lp.objective[i] = rng.uniform(-1, 1);
    lp.set_bounds(i, -10, 10);
  }
  for (int r = 0; r < 2 * n; ++r) {
    Eigen::VectorXd a(n);
    for (int i = 0; i < n; ++i) a[i] = rng.uniform(-1, 1);
    lp.add_le(a, rng.uniform(0.5, 3));
  }
  for (auto _ : state) benchmark::DoNotOptimize(solve_lp(lp));
}
BENCHMARK(BM_SolveLp)->Arg(4)->Arg(12)->Arg(24);

void BM_EnumerateRegions(benchmark::State& state) {
  const ReluNet net = ReluNet::random(3, 1, static_cast<int>(state.range(0)), 99);
  const Box q = cube(3, -1, 1);
  for (auto _ : state) benchmark::DoNotOptimize(enumerate_regions(net, q));
}
BENCHMARK(BM_EnumerateRegions)->Arg(4)->Arg(6);

void BM_ProjectWeights(benchmark::State& state) {
  const ReluNet net = ReluNet::random(3, 1, 4, 41);
  const Box q = cube(3, -0.5, 0.5);
  const ControllerPartition p{0, cube(4, -0.6, 0.6)};
  const auto regions = enumerate_regions(net, q);
  for (auto _ : state) benchmark::DoNotOptimize(project_weights(net, regions, q, p));
}
BENCHMARK(BM_ProjectWeights);

void BM_ControllerEvaluate(benchmark::State& state) {
  const StateSpace space = track_space(12, 10);
  std::map<int, ReluNet> locals;
  for (const auto& s : space.states())
    if (s.kind == StateKind::Normal) locals[s.id] = ReluNet::random(3, 1, 4, 7 + s.id);
  const GlobalController gc = compose_global(locals, space);
  Rng rng(5);
  Eigen::VectorXd x(3);
  for (auto _ : state) {
    x << rng.uniform(0, 0.96), rng.uniform(0, 1.2), rng.uniform(0, 2 * M_PI);
    benchmark::DoNotOptimize(gc.evaluate(x));
  }
}
BENCHMARK(BM_ControllerEvaluate);

}  // namespace
