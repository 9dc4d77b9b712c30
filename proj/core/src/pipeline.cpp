#include "cpwa/pipeline.hpp"

#include <algorithm>
#include <chrono>
#include <functional>
#include <sstream>

#include "cpwa/parallel.hpp"
#include "cpwa/rng.hpp"

namespace cpwa {

PartitionScheme StatePartitionSpec::make_scheme(const Box& bounds) const {
  if (!uniform_counts.empty()) return PartitionScheme::uniform(bounds, uniform_counts);
  PartitionScheme scheme;
  scheme.cuts = cuts;
  if (static_cast<int>(scheme.cuts.size()) != bounds.dim())
    throw SpecValidationError("state partition: cut lists do not match the state dimension");
  return scheme;
}

SystemModel WorkspaceSpec::make_model() const {
  switch (model_kind) {
    case ModelKind::Unicycle: return SystemModel::unicycle(speed, dt, disturbance);
    case ModelKind::IntegratorChain:
      return SystemModel::integrator_chain(chain_n, chain_m, dt, disturbance);
  }
  throw SpecValidationError("unknown model kind");
}

StateSpace WorkspaceSpec::make_space() const {
  return StateSpace::build(state_bounds, state_partition.make_scheme(state_bounds), goal, obstacles,
                           circular_axes);
}

LivenessConfig WorkspaceSpec::make_liveness_config() const {
  LivenessConfig config = sampling;
  config.horizon = horizon;
  return config;
}

void validate(const WorkspaceSpec& spec) {
  const SystemModel model = spec.make_model();
  if (spec.state_bounds.dim() != model.n)
    throw SpecValidationError("state bounds dimension does not match the model");
  if (spec.goal.dim() != model.n) throw SpecValidationError("goal dimension mismatch");
  if (!spec.state_bounds.contains(spec.goal, 1e-9))
    throw SpecValidationError("goal leaves the state bounds");
  for (std::size_t i = 0; i < spec.obstacles.size(); ++i) {
    const Box& obs = spec.obstacles[i];
    if (obs.dim() != model.n)
      throw SpecValidationError("obstacle " + std::to_string(i) + " dimension mismatch");
    if (!spec.state_bounds.contains(obs, 1e-9))
      throw SpecValidationError("obstacle " + std::to_string(i) + " leaves the state bounds");
    if (box_intersects(spec.goal, obs))
      throw SpecValidationError("goal intersects obstacle " + std::to_string(i));
    for (std::size_t j = 0; j < i; ++j)
      if (box_intersects(spec.obstacles[j], obs))
        throw SpecValidationError("obstacles " + std::to_string(j) + " and " + std::to_string(i) +
                                  " intersect");
  }
  if (spec.controller_bounds.dim() != model.m * (model.n + 1))
    throw SpecValidationError("controller bounds must live in R^{m(n+1)}");
  if (static_cast<int>(spec.controller_counts.size()) != spec.controller_bounds.dim())
    throw SpecValidationError("controller partition counts dimension mismatch");
  if (spec.horizon < 1) throw SpecValidationError("horizon must be positive");
  if (spec.training.hidden_width < 1) throw SpecValidationError("hidden width must be positive");
  // Building the space validates cut alignment of goal and obstacles.
  spec.make_space();
}

namespace {

class StageClock {
 public:
  explicit StageClock(std::vector<StageTiming>& out) : out_(out) {}

  template <typename Fn>
  auto run(const std::string& name, Fn&& fn) {
    const auto start = std::chrono::steady_clock::now();
    if constexpr (std::is_void_v<decltype(fn())>) {
      fn();
      record(name, start);
    } else {
      auto value = fn();
      record(name, start);
      return value;
    }
  }

 private:
  void record(const std::string& name, std::chrono::steady_clock::time_point start) {
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    out_.push_back({name, secs});
  }

  std::vector<StageTiming>& out_;
};

std::vector<Box> target_boxes(const StateSpace& space, const std::vector<int>& ids) {
  std::vector<Box> out;
  out.reserve(ids.size());
  for (int id : ids) out.push_back(space.state(id).region);
  return out;
}

}  // namespace

SynthesisResult run_synthesis(const WorkspaceSpec& spec, int jobs) {
  validate(spec);
  SynthesisResult result;
  StageClock clock(result.timings);
  const SystemModel model = spec.make_model();
  const LivenessConfig liveness_config = spec.make_liveness_config();

  result.space = clock.run("partition", [&] { return spec.make_space(); });
  result.partitions = clock.run("controller_partition", [&] {
    return partition_controller_space(spec.controller_bounds, spec.controller_counts);
  });
  result.graph = clock.run("posterior_graph", [&] {
    return build_posterior_graph(result.space, result.partitions, model, jobs);
  });
  result.safe = clock.run("unsafe_fixpoint", [&] { return compute_unsafe_fixpoint(result.graph); });
  result.pred = clock.run("predecessor_graph", [&] {
    return build_predecessor_graph(result.safe, result.space, result.partitions, model,
                                   liveness_config, jobs);
  });
  result.assignment = clock.run("assignment", [&] {
    const std::vector<int> dist = dist_to_goal(result.pred);
    return assign_partitions(result.graph, result.safe, result.pred, dist, result.space,
                             result.partitions, model, liveness_config, jobs);
  });

  const std::vector<int> trainable = initial_states(result.graph, result.safe);

  // Per-state SAFE-TRAIN with the top-ranked partition.
  std::vector<ReluNet> nets(trainable.size());
  std::vector<int> used_partition(trainable.size(), -1);
  clock.run("train", [&] {
    parallel_for(static_cast<int>(trainable.size()), jobs, [&](int i) {
      const int q = trainable[i];
      const int p = result.assignment.p_star[q];
      if (p < 0) return;
      TrainConfig config = spec.training;
      config.seed = mix_seed(spec.seed, static_cast<std::uint64_t>(q));
      const SafeTrainResult trained = safe_train(result.space.state(q).region,
                                                 result.partitions[p], model, result.space.state(
                                                     result.space.goal_id()).region,
                                                 config, &result.space);
      nets[i] = trained.net;
      used_partition[i] = p;
    });
  });

  // Reach verification with ranked-partition fallback; only failing local
  // nets are retrained.
  clock.run("verify", [&] {
    result.reach.resize(trainable.size());
    parallel_for(static_cast<int>(trainable.size()), jobs, [&](int i) {
      const int q = trainable[i];
      ReachReport report;
      report.state_id = q;
      if (used_partition[i] < 0) {
        result.reach[i] = report;
        return;
      }
      if (!result.assignment.live[q]) {
        // No finite-distance route to the goal: reach verification cannot
        // succeed, keep the safety-only net.
        report.partition_id = used_partition[i];
        report.attempts = 1;
        result.reach[i] = report;
        return;
      }
      const auto& ranking = result.assignment.ranking[q];
      int rank_index = 0;
      for (std::size_t r = 0; r < ranking.size(); ++r)
        if (ranking[r].first == used_partition[i]) rank_index = static_cast<int>(r);

      int attempts = 1;
      int p = used_partition[i];
      ReluNet net = nets[i];
      const int first_partition = p;
      const ReluNet first_net = net;
      bool passed = false;
      for (;;) {
        const std::vector<int> progress =
            progress_set(result.pred, result.assignment.dist, q, p, liveness_config.horizon);
        passed = !progress.empty() &&
                 reach_check(result.space.state(q).region, net, model,
                             target_boxes(result.space, progress), &result.space);
        if (passed || attempts > spec.retrain_attempts) break;
        // Advance to the next-ranked safe partition and retrain this state.
        ++rank_index;
        if (rank_index >= static_cast<int>(ranking.size())) break;
        p = ranking[rank_index].first;
        TrainConfig config = spec.training;
        config.seed = mix_seed(spec.seed, mix_seed(static_cast<std::uint64_t>(q),
                                                   static_cast<std::uint64_t>(attempts)));
        net = safe_train(result.space.state(q).region, result.partitions[p], model,
                         result.space.state(result.space.goal_id()).region, config, &result.space)
                  .net;
        ++attempts;
      }
      if (!passed) {
        // No candidate verified; keep the top-ranked training result rather
        // than whichever fallback happened to be tried last.
        p = first_partition;
        net = first_net;
      }
      nets[i] = std::move(net);
      used_partition[i] = p;
      report.partition_id = p;
      report.attempts = attempts;
      report.passed = passed;
      result.reach[i] = report;
    });
  });

  for (std::size_t i = 0; i < trainable.size(); ++i) {
    if (used_partition[i] < 0) continue;
    result.locals[trainable[i]] = nets[i];
    result.local_partition[trainable[i]] = used_partition[i];
  }
  result.controller = clock.run("compose", [&] {
    return compose_global(result.locals, result.space, result.local_partition);
  });

  // Certify chains: a state is chain-certified when reach_check passed there
  // and every progress successor is chain-certified (goal is by definition).
  clock.run("certify_chains", [&] {
    const int num_states = result.space.num_states();
    std::vector<char> passed(num_states, 0);
    for (const ReachReport& r : result.reach)
      if (r.state_id >= 0 && r.passed) passed[r.state_id] = 1;
    result.chain_certified.assign(num_states, 0);
    if (result.space.goal_id() >= 0) result.chain_certified[result.space.goal_id()] = 1;
    std::vector<char> visited(num_states, 0);
    std::function<bool(int)> certify = [&](int q) -> bool {
      if (q == result.space.goal_id()) return true;
      if (visited[q]) return result.chain_certified[q];
      visited[q] = 1;
      if (!passed[q]) return false;
      const auto it = result.local_partition.find(q);
      if (it == result.local_partition.end()) return false;
      const std::vector<int> progress = progress_set(result.pred, result.assignment.dist, q,
                                                     it->second, liveness_config.horizon);
      if (progress.empty()) return false;
      bool ok = true;
      for (int succ : progress)
        if (!certify(succ)) ok = false;
      result.chain_certified[q] = ok ? 1 : 0;
      return ok;
    };
    // Strictly decreasing dist makes the recursion well-founded.
    for (int q : trainable) certify(q);
  });

  return result;
}

std::string to_string(DisturbancePolicy policy) {
  switch (policy) {
    case DisturbancePolicy::None: return "none";
    case DisturbancePolicy::WorstCaseVertex: return "worst-vertex";
    case DisturbancePolicy::RandomInBox: return "random";
  }
  return "unknown";
}

DisturbancePolicy disturbance_policy_from_string(const std::string& s) {
  if (s == "none") return DisturbancePolicy::None;
  if (s == "worst-vertex") return DisturbancePolicy::WorstCaseVertex;
  if (s == "random") return DisturbancePolicy::RandomInBox;
  throw std::invalid_argument("unknown disturbance policy: " + s);
}

Trajectory simulate(const GlobalController& controller, const SystemModel& model,
                    const StateSpace& space, const Eigen::VectorXd& x0, int horizon,
                    DisturbancePolicy policy, std::uint64_t seed) {
  Trajectory traj;
  Rng rng(seed);
  const Box& goal = space.state(space.goal_id()).region;

  auto in_obstacle = [&](const Eigen::VectorXd& x) {
    for (int id : space.obstacle_ids())
      if (space.state(id).region.contains(x)) return true;
    return false;
  };
  auto log_state = [&](const Eigen::VectorXd& x) {
    traj.states.push_back(x);
    const bool safe_here = !in_obstacle(x);
    traj.row_safe.push_back(safe_here ? 1 : 0);
    traj.row_goal.push_back(goal.contains(x) ? 1 : 0);
    if (!safe_here) traj.safety_ok = false;
  };

  Eigen::VectorXd x = space.wrap(x0);
  log_state(x);
  if (goal.contains(x)) {
    traj.degenerate = true;
    traj.liveness_ok = true;
    traj.goal_step = 0;
    return traj;
  }

  std::vector<Eigen::VectorXd> vertices;
  if (model.disturbance) vertices = model.disturbance->corners();

  for (int t = 0; t < horizon; ++t) {
    const GlobalController::Eval eval = controller.evaluate(x);
    if (!eval.inside) {
      traj.outside_safe_set = true;
      traj.outside_step = t;
      return traj;
    }
    Eigen::VectorXd w = Eigen::VectorXd::Zero(model.n);
    if (model.disturbance) {
      switch (policy) {
        case DisturbancePolicy::None:
          break;
        case DisturbancePolicy::RandomInBox:
          for (int axis = 0; axis < model.n; ++axis)
            w[axis] = rng.uniform(model.disturbance->lo[axis], model.disturbance->hi[axis]);
          break;
        case DisturbancePolicy::WorstCaseVertex: {
          // Adversarial for liveness: the vertex pushing the next state
          // farthest from the goal box (ties to the first vertex).
          const Eigen::VectorXd base = step(model, x, eval.u);
          double worst = -1.0;
          for (const Eigen::VectorXd& vert : vertices) {
            const Eigen::VectorXd cand = space.wrap(base + vert);
            double sq = 0.0;
            for (int axis = 0; axis < model.n; ++axis) {
              double gap = 0.0;
              if (cand[axis] < goal.lo[axis]) gap = goal.lo[axis] - cand[axis];
              if (cand[axis] > goal.hi[axis]) gap = cand[axis] - goal.hi[axis];
              sq += gap * gap;
            }
            if (sq > worst) {
              worst = sq;
              w = vert;
            }
          }
          break;
        }
      }
    }
    x = space.wrap(step(model, x, eval.u, w));
    traj.inputs.push_back(eval.u);
    traj.disturbances.push_back(w);
    log_state(x);
    if (goal.contains(x)) {
      traj.liveness_ok = true;
      traj.goal_step = t + 1;
      return traj;
    }
  }
  return traj;
}

}  // namespace cpwa
