// Acceptance suite: runs every criterion at its stated tolerance and prints
// one pass/fail line per criterion. Exit code is nonzero when any fails.
//
// Criteria depend on shared artifacts (the desk-scale synthesis feeds the
// invariance and determinism checks), so execution order differs from the
// report order; results are printed sorted at the end.

#include <chrono>
#include <cmath>
#include <cstring>
#include <iostream>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <vector>

#include "cpwa/liveness.hpp"
#include "cpwa/neural.hpp"
#include "cpwa/pipeline.hpp"
#include "cpwa/rng.hpp"
#include "cpwa/serialization.hpp"
#include "fixtures.hpp"
#include "oracles.hpp"

using namespace cpwa;

namespace {

struct CriterionResult {
  int id = 0;
  bool passed = false;
  double seconds = 0.0;
  std::string detail;
};

struct Registry {
  // (name, graph, safe) triplets collected from every synthesized scenario.
  std::vector<std::tuple<std::string, PosteriorGraph, SafeSets>> scenarios;
};

Eigen::VectorXd sample_box(const Box& b, Rng& rng) {
  Eigen::VectorXd x(b.dim());
  for (int i = 0; i < b.dim(); ++i) x[i] = rng.uniform(b.lo[i], b.hi[i]);
  return x;
}

class Runner {
 public:
  template <typename Fn>
  void run(int id, Fn&& fn) {
    if (!selected(id)) return;
    CriterionResult r;
    r.id = id;
    const auto start = std::chrono::steady_clock::now();
    try {
      r.detail = fn(r.passed);
    } catch (const std::exception& e) {
      r.passed = false;
      r.detail = std::string("exception: ") + e.what();
    }
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    results_.push_back(std::move(r));
  }

  bool selected(int id) const { return filter_.empty() || filter_.count(id); }
  void select(int id) { filter_.insert(id); }

  int report() {
    std::sort(results_.begin(), results_.end(),
              [](const auto& a, const auto& b) { return a.id < b.id; });
    int failures = 0;
    for (const auto& r : results_) {
      std::printf("[%s] criterion %2d (%6.2fs): %s\n", r.passed ? "PASS" : "FAIL", r.id, r.seconds,
                  r.detail.c_str());
      if (!r.passed) ++failures;
    }
    std::printf("%zu criteria run, %d failed\n", results_.size(), failures);
    return failures == 0 ? 0 : 1;
  }

 private:
  std::vector<CriterionResult> results_;
  std::set<int> filter_;
};

bool prop2_holds(const PosteriorGraph& graph, const SafeSets& safe, std::string& why) {
  for (int q : safe.x_safe) {
    if (graph.states[q].kind != StateKind::Normal) continue;
    bool exists = false;
    for (int p = 0; p < graph.num_partitions() && !exists; ++p) {
      if (graph.edges[q][p].empty()) continue;
      bool inside = true;
      for (int succ : graph.edges[q][p])
        if (!safe.is_safe(succ)) {
          inside = false;
          break;
        }
      if (inside) exists = true;
    }
    if (!exists) {
      why = "state " + std::to_string(q) + " has no all-safe partition";
      return false;
    }
  }
  return true;
}

// One training scenario evaluated for criteria 5 and 6.
struct ProjectionOutcome {
  bool laws_ok = true;
  bool bound_ok = true;
};

ProjectionOutcome check_projection_scenario(Rng& rng, int index) {
  const auto scenario = fixtures::make_train_scenario(rng, index % 2 == 0);
  const ReluNet initial = ReluNet::random(scenario.model.n, scenario.model.m, 4, 7000 + index);
  const auto data = generate_expert_data(scenario.q, scenario.partition, scenario.model,
                                         scenario.goal, 80, 7100 + index);
  const TrainResult trained = constrained_train(initial, data, 150, 0.1);
  const auto regions = enumerate_regions(trained.net, scenario.q);
  const ProjectionResult proj =
      project_weights(trained.net, regions, scenario.q, scenario.partition);
  ReluNet projected = trained.net;
  projected.W2 = proj.W2;
  projected.b2 = proj.b2;

  ProjectionOutcome out;
  // Criterion 5: independent recomputation of every region law.
  for (const auto& region : regions) {
    const Eigen::MatrixXd K = projected.W2 * region.G;
    const Eigen::VectorXd b = projected.W2 * region.g + projected.b2;
    const Eigen::VectorXd flat = flatten_law({K, b});
    for (int i = 0; i < flat.size(); ++i) {
      if (flat[i] < scenario.partition.bounds.lo[i] - 1e-7 ||
          flat[i] > scenario.partition.bounds.hi[i] + 1e-7)
        out.laws_ok = false;
    }
  }
  // Criterion 6: sampled 1-norm deviation never exceeds the optimum t.
  for (int s = 0; s < 1000; ++s) {
    const Eigen::VectorXd x = sample_box(scenario.q, rng);
    const double dev = (projected.forward(x) - trained.net.forward(x)).lpNorm<1>();
    if (dev > proj.bound + 1e-7) out.bound_ok = false;
  }
  return out;
}

std::string desk_artifacts(const WorkspaceSpec& spec, const SynthesisResult& result) {
  // Concatenated deterministic artifacts (no timings) for the byte-identity
  // check, including simulated trajectories at fixed seeds.
  std::ostringstream all;
  all << abstraction_to_json(result.space, result.graph);
  all << safe_sets_to_json(result.safe);
  all << pred_graph_to_json(result.pred);
  all << assignment_to_json(result.assignment);
  all << nets_to_json(result.locals, result.local_partition, spec.seed);
  all << controller_to_json(result.controller);
  all << reach_report_to_json(result.reach, result.chain_certified);
  const SystemModel model = spec.make_model();
  const auto init = initial_states(result.graph, result.safe);
  Rng rng(mix_seed(spec.seed, 404));
  for (int k = 0; k < 5 && !init.empty(); ++k) {
    const Box& region = result.space.state(init[rng.below(static_cast<int>(init.size()))]).region;
    const Trajectory traj = simulate(result.controller, model, result.space, sample_box(region, rng),
                                     spec.horizon, DisturbancePolicy::RandomInBox,
                                     mix_seed(spec.seed, 500 + k));
    all << trajectory_to_csv(traj, model.n, model.m);
  }
  return all.str();
}

}  // namespace

int main(int argc, char** argv) {
  Runner runner;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--criterion") == 0 && i + 1 < argc) {
      std::stringstream ss(argv[++i]);
      std::string tok;
      while (std::getline(ss, tok, ',')) runner.select(std::stoi(tok));
    }
  }

  Registry registry;

  // --- Criterion 1: five-state fixture equivalence --------------------------
  runner.run(1, [&](bool& passed) {
    const auto w = fixtures::make_line_world();
    const SafeSets safe = compute_unsafe_fixpoint(w.graph);
    registry.scenarios.emplace_back("fixture", w.graph, safe);

    std::set<int> unsafe(safe.x_unsafe.begin(), safe.x_unsafe.end());
    const bool sets_ok = unsafe.count(w.qa) == 1 && unsafe.count(w.obst) == 1 &&
                         unsafe.count(w.graph.out_of_bounds_id) == 1 && unsafe.size() == 3;
    const bool psafe_ok = safe.p_safe[w.qb] == std::vector<int>{w.up} &&
                          safe.p_safe[w.qc] == std::vector<int>{w.up, w.down};
    const bool init_ok = initial_states(w.graph, safe) == std::vector<int>{w.qb, w.qc};

    LivenessConfig config;
    config.state_grid = 5;
    config.law_grid = 5;
    config.horizon = 10;
    const auto pred = build_predecessor_graph(safe, w.space, w.partitions, w.model, config);
    const auto dist = dist_to_goal(pred);
    const Assignment a =
        assign_partitions(w.graph, safe, pred, dist, w.space, w.partitions, w.model, config);
    const bool assign_ok = a.p_star[w.qb] == w.up && a.p_star[w.qc] == w.up;

    passed = sets_ok && psafe_ok && init_ok && assign_ok;
    std::ostringstream detail;
    detail << "fixture unsafe/p_safe/init/assignment "
           << (sets_ok ? "ok" : "BAD") << "/" << (psafe_ok ? "ok" : "BAD") << "/"
           << (init_ok ? "ok" : "BAD") << "/" << (assign_ok ? "ok" : "BAD");
    return detail.str();
  });

  // --- Criterion 2: over-approximation soundness -----------------------------
  runner.run(2, [&](bool& passed) {
    Rng rng(210);
    Eigen::VectorXd wlo(3), whi(3);
    wlo << -0.005, -0.005, -0.005;
    whi << 0.005, 0.005, 0.005;
    const SystemModel model = SystemModel::unicycle(1.0, 0.1, Box(wlo, whi));
    long violations = 0;
    const int pairs = 120;
    for (int pair = 0; pair < pairs; ++pair) {
      Eigen::VectorXd qlo(3), qhi(3);
      for (int i = 0; i < 3; ++i) {
        qlo[i] = rng.uniform(-1.0, 1.0);
        qhi[i] = qlo[i] + rng.uniform(0.05, 0.8);
      }
      const Box q(qlo, qhi);
      Eigen::VectorXd plo(4), phi(4);
      for (int i = 0; i < 4; ++i) {
        plo[i] = rng.uniform(-1.0, 0.5);
        phi[i] = plo[i] + rng.uniform(0.05, 1.5);
      }
      const ControllerPartition partition{0, Box(plo, phi)};
      const Box post = interval_post(model, q, partition);
      const auto w_corners = model.disturbance->corners();
      for (int s = 0; s < 10000; ++s) {
        const Eigen::VectorXd x = sample_box(q, rng);
        const AffineLaw law = unflatten_law(sample_box(partition.bounds, rng), 3, 1);
        // Disturbance at a random point and at the extreme vertices.
        const Eigen::VectorXd w_rand = sample_box(*model.disturbance, rng);
        if (!post.contains(step(model, x, law.apply(x), w_rand))) ++violations;
        if (s % 100 == 0) {
          for (const auto& w : w_corners)
            if (!post.contains(step(model, x, law.apply(x), w))) ++violations;
        }
      }
    }
    passed = violations == 0;
    return std::to_string(pairs) + " pairs x 10^4 samples, " + std::to_string(violations) +
           " containment violations";
  });

  // --- Criterion 3: fixpoint vs brute-force oracle ---------------------------
  runner.run(3, [&](bool& passed) {
    Rng rng(303);
    int mismatches = 0;
    for (int trial = 0; trial < 200; ++trial) {
      const int num_states = 4 + rng.below(5);  // up to 8
      const int num_partitions = 1 + rng.below(3);
      const auto graph = fixtures::random_graph(rng, num_states, num_partitions);
      const SafeSets safe = compute_unsafe_fixpoint(graph);
      const auto expected = oracle::brute_force_unsafe(graph);
      if (std::set<int>(safe.x_unsafe.begin(), safe.x_unsafe.end()) != expected.unsafe ||
          safe.iterations != expected.iterations)
        ++mismatches;
      if (trial < 50) registry.scenarios.emplace_back("random-graph", graph, safe);
    }
    passed = mismatches == 0;
    return "200 random graphs, " + std::to_string(mismatches) + " mismatches vs oracle";
  });

  // --- Criteria 5 and 6: projection safety and deviation bound ---------------
  static bool c5_ok = true, c6_ok = true;
  static int c56_scenarios = 0;
  runner.run(5, [&](bool& passed) {
    Rng rng(505);
    for (int i = 0; i < 24; ++i) {
      const ProjectionOutcome out = check_projection_scenario(rng, i);
      c5_ok = c5_ok && out.laws_ok;
      c6_ok = c6_ok && out.bound_ok;
      ++c56_scenarios;
    }
    passed = c5_ok;
    return std::to_string(c56_scenarios) + " scenarios, every region law inside its partition: " +
           (c5_ok ? "yes" : "NO");
  });
  runner.run(6, [&](bool& passed) {
    if (c56_scenarios == 0) {  // criterion 5 filtered out; run scenarios here
      Rng rng(505);
      for (int i = 0; i < 24; ++i) {
        const ProjectionOutcome out = check_projection_scenario(rng, i);
        c6_ok = c6_ok && out.bound_ok;
        ++c56_scenarios;
      }
    }
    passed = c6_ok;
    return std::to_string(c56_scenarios) +
           " scenarios, sampled deviation within the optimal bound: " + (c6_ok ? "yes" : "NO");
  });

  // --- Criterion 7: LP solver vs vertex oracle -------------------------------
  runner.run(7, [&](bool& passed) {
    Rng rng(707);
    int mismatches = 0, optimal = 0;
    for (int trial = 0; trial < 500; ++trial) {
      const LpProblem lp = fixtures::random_lp(rng);
      const LpSolution s = solve_lp(lp);
      const auto expected = oracle::lp_vertex_oracle(lp);
      if (expected.feasible) {
        if (s.status != LpStatus::Optimal ||
            std::abs(s.objective_value - expected.objective) > 1e-6)
          ++mismatches;
        else
          ++optimal;
      } else if (s.status != LpStatus::Infeasible) {
        ++mismatches;
      }
    }
    passed = mismatches == 0;
    return "500 LPs, " + std::to_string(mismatches) + " mismatches (" + std::to_string(optimal) +
           " optimal)";
  });

  // --- Criterion 8: region enumeration membership ----------------------------
  runner.run(8, [&](bool& passed) {
    Rng rng(808);
    long bad_membership = 0, bad_law = 0;
    for (int trial = 0; trial < 50; ++trial) {
      const int n = trial % 2 == 0 ? 2 : 3;
      const ReluNet net = ReluNet::random(n, 1, 4, 8000 + trial);
      const Box q(Eigen::VectorXd::Constant(n, -1.0), Eigen::VectorXd::Constant(n, 1.0));
      const auto regions = enumerate_regions(net, q);
      for (int s = 0; s < 10000; ++s) {
        const Eigen::VectorXd x = sample_box(q, rng);
        int containing = 0;
        for (const auto& region : regions)
          if (region.region.contains(x, 1e-9)) ++containing;
        if (containing != 1) ++bad_membership;
        const int idx = locate_region(regions, x);
        if (idx < 0 || (regions[idx].law.apply(x) - net.forward(x)).lpNorm<Eigen::Infinity>() > 1e-9)
          ++bad_law;
      }
    }
    passed = bad_membership == 0 && bad_law == 0;
    return "50 nets x 10^4 points: " + std::to_string(bad_membership) +
           " membership violations, " + std::to_string(bad_law) + " law mismatches";
  });

  // --- Criterion 9: gradient check -------------------------------------------
  runner.run(9, [&](bool& passed) {
    Rng rng(909);
    double worst = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
      const int n = 2 + trial % 2;
      const ReluNet net = ReluNet::random(n, 1, 4, 9000 + trial);
      std::vector<ExpertSample> data;
      for (int i = 0; i < 16; ++i) {
        Eigen::VectorXd x(n);
        for (int j = 0; j < n; ++j) x[j] = rng.uniform(-1, 1);
        Eigen::VectorXd u(1);
        u << rng.uniform(-1, 1);
        data.push_back({x, u, Eigen::VectorXd::Zero(n + 1)});
      }
      const auto analytic = oracle::analytic_grads(net, data);
      const auto fd = oracle::finite_difference_grads(net, data);
      auto rel = [](const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
        return (a - b).cwiseAbs().maxCoeff() / std::max(1.0, b.cwiseAbs().maxCoeff());
      };
      worst = std::max({worst, rel(analytic.W1, fd.W1), rel(analytic.W2, fd.W2),
                        rel(analytic.b1, fd.b1), rel(analytic.b2, fd.b2)});
    }
    passed = worst < 1e-5;
    std::ostringstream detail;
    detail << "20 nets, worst relative gradient error " << worst;
    return detail.str();
  });

  // --- Criterion 10: desk-scale end-to-end -----------------------------------
  static WorkspaceSpec desk_spec = fixtures::desk_unicycle_spec();
  static std::unique_ptr<SynthesisResult> desk_result;
  static std::string desk_blob;
  runner.run(10, [&](bool& passed) {
    const auto t0 = std::chrono::steady_clock::now();
    desk_result = std::make_unique<SynthesisResult>(run_synthesis(desk_spec, 1));
    const double synth_secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const SynthesisResult& result = *desk_result;
    registry.scenarios.emplace_back("desk-unicycle", result.graph, result.safe);

    const auto init = initial_states(result.graph, result.safe);
    const bool nonempty = !init.empty();

    const SystemModel model = desk_spec.make_model();
    Rng rng(mix_seed(desk_spec.seed, 10));
    int obstacle_entries = 0, exits = 0, outside = 0;
    int certified_starts = 0, certified_reached = 0;
    for (int k = 0; k < 100; ++k) {
      const int q0 = init[rng.below(static_cast<int>(init.size()))];
      const Eigen::VectorXd x0 = sample_box(result.space.state(q0).region, rng);
      const Trajectory traj =
          simulate(result.controller, model, result.space, x0, desk_spec.horizon,
                   DisturbancePolicy::RandomInBox, mix_seed(desk_spec.seed, 1000 + k));
      if (!traj.safety_ok) ++obstacle_entries;
      if (traj.outside_safe_set) ++outside;
      for (const auto& x : traj.states) {
        bool covered = result.space.state(result.space.goal_id()).region.contains(x);
        if (!covered) {
          const int at = result.space.state_at(x);
          covered = at >= 0 && result.space.state(at).kind == StateKind::Normal &&
                    result.safe.is_safe(at);
        }
        if (!covered) {
          ++exits;
          break;
        }
      }
      if (result.chain_certified[q0]) {
        ++certified_starts;
        if (traj.liveness_ok) ++certified_reached;
      }
    }
    // Exercise the liveness clause on every chain-certified state directly,
    // not only on whichever random starts happened to land in one.
    int certified_states = 0, certified_ok = 0;
    for (int q : init) {
      if (!result.chain_certified[q]) continue;
      ++certified_states;
      const Trajectory traj = simulate(
          result.controller, model, result.space, sample_box(result.space.state(q).region, rng),
          desk_spec.horizon, DisturbancePolicy::RandomInBox, mix_seed(desk_spec.seed, 7000 + q));
      if (traj.liveness_ok && traj.safety_ok) ++certified_ok;
    }
    const bool in_time = synth_secs < 600.0;
    const bool safety = obstacle_entries == 0 && exits == 0 && outside == 0;
    const bool liveness =
        certified_reached == certified_starts && certified_ok == certified_states;
    passed = nonempty && in_time && safety && liveness;

    desk_blob = desk_artifacts(desk_spec, result);

    std::ostringstream detail;
    detail << "synthesis " << static_cast<int>(synth_secs) << "s, |X_init| = " << init.size()
           << ", obstacle entries " << obstacle_entries << ", exits " << exits << ", outside "
           << outside << ", certified starts " << certified_starts << "/" << certified_reached
           << " reached, certified states " << certified_states << "/" << certified_ok
           << " reached";
    return detail.str();
  });

  // --- Criterion 11: integrator-chain scalability smoke -----------------------
  runner.run(11, [&](bool& passed) {
    std::ostringstream detail;
    passed = true;
    for (int n : {2, 4}) {
      WorkspaceSpec spec;
      spec.name = "chain-" + std::to_string(n);
      spec.model_kind = ModelKind::IntegratorChain;
      spec.chain_n = n;
      spec.chain_m = 2;
      spec.dt = 0.1;
      spec.state_bounds =
          Box(Eigen::VectorXd::Zero(n), Eigen::VectorXd::Constant(n, 1.0));
      spec.state_partition.uniform_counts.assign(n, 2);
      spec.goal = Box(Eigen::VectorXd::Zero(n), Eigen::VectorXd::Constant(n, 0.5));
      const int d = 2 * (n + 1);
      spec.controller_bounds =
          Box(Eigen::VectorXd::Constant(d, -0.1), Eigen::VectorXd::Constant(d, 0.1));
      spec.controller_counts.assign(d, 1);
      spec.controller_counts[0] = 2;  // two partitions, fixed across n
      spec.horizon = 10;
      validate(spec);

      const StateSpace space = spec.make_space();
      const auto partitions =
          partition_controller_space(spec.controller_bounds, spec.controller_counts);
      const auto t0 = std::chrono::steady_clock::now();
      const PosteriorGraph graph = build_posterior_graph(space, partitions, spec.make_model());
      const double secs =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      const SafeSets safe = compute_unsafe_fixpoint(graph);
      registry.scenarios.emplace_back(spec.name, graph, safe);

      const int expected = 1 << n;  // 2 cells per axis, goal absorbs one cell
      if (space.num_states() != expected) passed = false;
      detail << "n=" << n << ": " << space.num_states() << " states (expect " << expected << ") in "
             << secs << "s; ";
    }
    return detail.str();
  });

  // --- Criterion 4: Prop-2 invariance on every synthesized scenario ----------
  runner.run(4, [&](bool& passed) {
    passed = true;
    std::string why;
    int checked = 0;
    for (const auto& [name, graph, safe] : registry.scenarios) {
      if (!prop2_holds(graph, safe, why)) {
        passed = false;
        return name + ": " + why;
      }
      ++checked;
    }
    return std::to_string(checked) + " scenarios satisfy the safe-invariance property";
  });

  // --- Criterion 12: determinism ----------------------------------------------
  runner.run(12, [&](bool& passed) {
    if (!desk_result) {
      desk_result = std::make_unique<SynthesisResult>(run_synthesis(desk_spec, 1));
      desk_blob = desk_artifacts(desk_spec, *desk_result);
    }
    const SynthesisResult rerun = run_synthesis(desk_spec, 1);
    const std::string blob = desk_artifacts(desk_spec, rerun);
    passed = blob == desk_blob;
    return passed ? "two runs, byte-identical artifacts ("
                        + std::to_string(blob.size()) + " bytes)"
                  : "artifact bytes differ between runs";
  });

  return runner.report();
}
