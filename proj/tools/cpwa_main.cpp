// Command-line front end for the synthesis pipeline. Stage artifacts are
// plain JSON/CSV files in the output directory, so any stage can be rerun or
// resumed from the previous stage's files.

#include <chrono>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "cpwa/liveness.hpp"
#include "cpwa/parallel.hpp"
#include "cpwa/pipeline.hpp"
#include "cpwa/rng.hpp"
#include "cpwa/serialization.hpp"

namespace fs = std::filesystem;
using namespace cpwa;

namespace {

struct CommonOptions {
  std::string spec_path;
  std::string out_dir = "out";
  std::optional<std::uint64_t> seed;
  int jobs = 1;
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
  cmd->add_option("--spec", opts.spec_path, "workspace spec JSON")->required();
  cmd->add_option("--out", opts.out_dir, "output directory");
  cmd->add_option("--seed", opts.seed, "override the spec seed");
  cmd->add_option("--jobs", opts.jobs, "worker threads for parallel stages");
}

WorkspaceSpec load(const CommonOptions& opts) {
  WorkspaceSpec spec = load_spec(opts.spec_path);
  if (opts.seed) spec.seed = *opts.seed;
  return spec;
}

fs::path ensure_out(const CommonOptions& opts) {
  fs::create_directories(opts.out_dir);
  return fs::path(opts.out_dir);
}

// Stage runner: loads artifacts below `from`, computes the rest, writes
// everything it computed. Stages in order:
//   abstract < safe-sets < assign < train < compose < verify
enum Stage { kAbstract = 0, kSafeSets, kAssign, kTrain, kCompose, kVerify, kStageCount };

Stage stage_from_name(const std::string& name) {
  if (name == "abstract") return kAbstract;
  if (name == "safe-sets") return kSafeSets;
  if (name == "assign") return kAssign;
  if (name == "train") return kTrain;
  if (name == "compose") return kCompose;
  if (name == "verify") return kVerify;
  throw std::invalid_argument("unknown stage: " + name);
}

struct PipelineState {
  StateSpace space;
  std::vector<ControllerPartition> partitions;
  PosteriorGraph graph;
  SafeSets safe;
  PredecessorGraph pred;
  Assignment assignment;
  std::map<int, ReluNet> locals;
  std::map<int, int> local_partition;
  GlobalController controller;
  std::vector<ReachReport> reach;
  std::vector<char> chain_certified;
  std::vector<StageTiming> timings;
};

void load_through(PipelineState& state, const WorkspaceSpec& spec, const fs::path& out,
                  Stage last) {
  AbstractionArtifact abstraction =
      abstraction_from_json_string(read_file((out / "abstraction.json").string()));
  state.space = std::move(abstraction.space);
  state.graph = std::move(abstraction.graph);
  state.partitions = state.graph.partitions;
  if (last >= kSafeSets)
    state.safe = safe_sets_from_json_string(read_file((out / "safe_sets.json").string()));
  if (last >= kAssign) {
    state.pred = pred_graph_from_json_string(read_file((out / "pred_graph.json").string()));
    state.assignment =
        assignment_from_json_string(read_file((out / "assignment.json").string()));
  }
  if (last >= kTrain) {
    std::uint64_t seed = spec.seed;
    nets_from_json_string(read_file((out / "nets.json").string()), state.locals,
                          state.local_partition, seed);
  }
  if (last >= kCompose)
    state.controller = controller_from_json_string(read_file((out / "controller.json").string()));
}

template <typename Fn>
void timed(PipelineState& state, const std::string& name, Fn&& fn) {
  const auto start = std::chrono::steady_clock::now();
  fn();
  state.timings.push_back(
      {name, std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()});
}

void run_stage_abstract(PipelineState& state, const WorkspaceSpec& spec, int jobs) {
  timed(state, "abstract", [&] {
    state.space = spec.make_space();
    state.partitions = partition_controller_space(spec.controller_bounds, spec.controller_counts);
    state.graph = build_posterior_graph(state.space, state.partitions, spec.make_model(), jobs);
  });
}

void run_stage_safe_sets(PipelineState& state) {
  timed(state, "safe-sets", [&] { state.safe = compute_unsafe_fixpoint(state.graph); });
}

void run_stage_assign(PipelineState& state, const WorkspaceSpec& spec, int jobs) {
  timed(state, "assign", [&] {
    const SystemModel model = spec.make_model();
    const LivenessConfig config = spec.make_liveness_config();
    state.pred =
        build_predecessor_graph(state.safe, state.space, state.partitions, model, config, jobs);
    const std::vector<int> dist = dist_to_goal(state.pred);
    state.assignment = assign_partitions(state.graph, state.safe, state.pred, dist, state.space,
                                         state.partitions, model, config, jobs);
  });
}

void run_stage_train(PipelineState& state, const WorkspaceSpec& spec, int jobs) {
  timed(state, "train", [&] {
    const SystemModel model = spec.make_model();
    const std::vector<int> trainable = initial_states(state.graph, state.safe);
    std::vector<ReluNet> nets(trainable.size());
    std::vector<int> used(trainable.size(), -1);
    parallel_for(static_cast<int>(trainable.size()), jobs, [&](int i) {
      const int q = trainable[i];
      const int p = state.assignment.p_star[q];
      if (p < 0) return;
      TrainConfig config = spec.training;
      config.seed = mix_seed(spec.seed, static_cast<std::uint64_t>(q));
      nets[i] = safe_train(state.space.state(q).region, state.partitions[p], model,
                           state.space.state(state.space.goal_id()).region, config, &state.space)
                    .net;
      used[i] = p;
    });
    state.locals.clear();
    state.local_partition.clear();
    for (std::size_t i = 0; i < trainable.size(); ++i) {
      if (used[i] < 0) continue;
      state.locals[trainable[i]] = nets[i];
      state.local_partition[trainable[i]] = used[i];
    }
  });
}

void run_stage_compose(PipelineState& state) {
  timed(state, "compose", [&] {
    state.controller = compose_global(state.locals, state.space, state.local_partition);
  });
}

void run_stage_verify(PipelineState& state, const WorkspaceSpec& spec, int jobs) {
  timed(state, "verify", [&] {
    const SystemModel model = spec.make_model();
    const LivenessConfig config = spec.make_liveness_config();
    const std::vector<int> dist = state.assignment.dist;
    std::vector<int> states_with_nets;
    for (const auto& [q, net] : state.locals) states_with_nets.push_back(q);
    state.reach.assign(states_with_nets.size(), {});
    parallel_for(static_cast<int>(states_with_nets.size()), jobs, [&](int i) {
      const int q = states_with_nets[i];
      ReachReport report;
      report.state_id = q;
      report.partition_id = state.local_partition.at(q);
      report.attempts = 1;
      const std::vector<int> progress =
          progress_set(state.pred, dist, q, report.partition_id, config.horizon);
      std::vector<Box> targets;
      for (int t : progress) targets.push_back(state.space.state(t).region);
      report.passed = !targets.empty() &&
                      reach_check(state.space.state(q).region, state.locals.at(q), model, targets,
                                  &state.space);
      state.reach[i] = report;
    });
    // Chain certification over the verified nets.
    const int num_states = state.space.num_states();
    std::vector<char> passed(num_states, 0);
    for (const auto& r : state.reach)
      if (r.state_id >= 0 && r.passed) passed[r.state_id] = 1;
    state.chain_certified.assign(num_states, 0);
    state.chain_certified[state.space.goal_id()] = 1;
    std::vector<char> visited(num_states, 0);
    std::function<bool(int)> certify = [&](int q) -> bool {
      if (q == state.space.goal_id()) return true;
      if (visited[q]) return state.chain_certified[q];
      visited[q] = 1;
      if (!passed[q]) return false;
      const std::vector<int> progress =
          progress_set(state.pred, dist, q, state.local_partition.at(q), config.horizon);
      if (progress.empty()) return false;
      bool ok = true;
      for (int succ : progress)
        if (!certify(succ)) ok = false;
      state.chain_certified[q] = ok ? 1 : 0;
      return ok;
    };
    for (const auto& [q, net] : state.locals) certify(q);
  });
}

void write_through(const PipelineState& state, const WorkspaceSpec& spec, const fs::path& out,
                   Stage first, Stage last) {
  if (first <= kAbstract && last >= kAbstract)
    write_file((out / "abstraction.json").string(),
               abstraction_to_json(state.space, state.graph));
  if (first <= kSafeSets && last >= kSafeSets)
    write_file((out / "safe_sets.json").string(), safe_sets_to_json(state.safe));
  if (first <= kAssign && last >= kAssign) {
    write_file((out / "pred_graph.json").string(), pred_graph_to_json(state.pred));
    write_file((out / "assignment.json").string(), assignment_to_json(state.assignment));
  }
  if (first <= kTrain && last >= kTrain)
    write_file((out / "nets.json").string(),
               nets_to_json(state.locals, state.local_partition, spec.seed));
  if (first <= kCompose && last >= kCompose)
    write_file((out / "controller.json").string(), controller_to_json(state.controller));
  if (first <= kVerify && last >= kVerify)
    write_file((out / "reach_report.json").string(),
               reach_report_to_json(state.reach, state.chain_certified));
  write_file((out / "timings.json").string(), timings_to_json(state.timings));
}

// Runs stages [first, last], loading anything before `first` from disk.
int run_stages(const CommonOptions& opts, Stage first, Stage last) {
  const WorkspaceSpec spec = load(opts);
  const fs::path out = ensure_out(opts);
  PipelineState state;
  if (first > kAbstract) load_through(state, spec, out, static_cast<Stage>(first - 1));
  for (int s = first; s <= last; ++s) {
    switch (static_cast<Stage>(s)) {
      case kAbstract: run_stage_abstract(state, spec, opts.jobs); break;
      case kSafeSets: run_stage_safe_sets(state); break;
      case kAssign: run_stage_assign(state, spec, opts.jobs); break;
      case kTrain: run_stage_train(state, spec, opts.jobs); break;
      case kCompose: run_stage_compose(state); break;
      case kVerify: run_stage_verify(state, spec, opts.jobs); break;
      default: break;
    }
  }
  write_through(state, spec, out, first, last);
  return 0;
}

int cmd_pipeline(const CommonOptions& opts, const std::string& resume) {
  if (resume.empty()) {
    // The integrated path keeps the retrain-on-reach-failure loop.
    const WorkspaceSpec spec = load(opts);
    const fs::path out = ensure_out(opts);
    const SynthesisResult result = run_synthesis(spec, opts.jobs);
    write_file((out / "abstraction.json").string(),
               abstraction_to_json(result.space, result.graph));
    write_file((out / "safe_sets.json").string(), safe_sets_to_json(result.safe));
    write_file((out / "pred_graph.json").string(), pred_graph_to_json(result.pred));
    write_file((out / "assignment.json").string(), assignment_to_json(result.assignment));
    write_file((out / "nets.json").string(),
               nets_to_json(result.locals, result.local_partition, spec.seed));
    write_file((out / "controller.json").string(), controller_to_json(result.controller));
    write_file((out / "reach_report.json").string(),
               reach_report_to_json(result.reach, result.chain_certified));
    write_file((out / "timings.json").string(), timings_to_json(result.timings));
    int passed = 0;
    for (const auto& r : result.reach)
      if (r.passed) ++passed;
    std::cout << "safe states: " << initial_states(result.graph, result.safe).size()
              << ", local nets: " << result.locals.size() << ", reach-verified: " << passed
              << "\n";
    return 0;
  }
  return run_stages(opts, stage_from_name(resume), kVerify);
}

int cmd_simulate(const CommonOptions& opts, const std::string& x0_text, int count, int horizon,
                 const std::string& policy_name) {
  const WorkspaceSpec spec = load(opts);
  const fs::path out = ensure_out(opts);
  const SystemModel model = spec.make_model();
  const StateSpace space = spec.make_space();
  const GlobalController controller =
      controller_from_json_string(read_file((out / "controller.json").string()));
  const DisturbancePolicy policy = disturbance_policy_from_string(policy_name);
  const int steps = horizon > 0 ? horizon : spec.horizon;

  std::vector<Eigen::VectorXd> starts;
  if (!x0_text.empty()) {
    Eigen::VectorXd x0(model.n);
    std::stringstream ss(x0_text);
    std::string tok;
    int i = 0;
    while (std::getline(ss, tok, ',') && i < model.n) x0[i++] = std::stod(tok);
    if (i != model.n) throw std::invalid_argument("--x0 needs " + std::to_string(model.n) + " values");
    starts.push_back(x0);
  } else {
    // Seeded-random points inside the gates of the composed controller.
    Rng rng(mix_seed(spec.seed, 31));
    if (controller.modules.empty()) throw std::runtime_error("controller has no modules");
    for (int k = 0; k < count; ++k) {
      const auto& module = controller.modules[rng.below(static_cast<int>(controller.modules.size()))];
      Eigen::VectorXd x0(model.n);
      for (int i = 0; i < model.n; ++i)
        x0[i] = rng.uniform(module.gate.lo[i], module.gate.hi[i]);
      starts.push_back(x0);
    }
  }

  int safe_count = 0, live_count = 0;
  for (std::size_t k = 0; k < starts.size(); ++k) {
    const Trajectory traj = simulate(controller, model, space, starts[k],
                                     steps, policy, mix_seed(spec.seed, 100 + k));
    const std::string name = "trajectory_" + std::to_string(k) + ".csv";
    write_file((out / name).string(), trajectory_to_csv(traj, model.n, model.m));
    if (traj.safety_ok) ++safe_count;
    if (traj.liveness_ok) ++live_count;
  }
  std::cout << starts.size() << " trajectories, safe " << safe_count << ", reached goal "
            << live_count << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Controller synthesis for reach-avoid specifications on box-partitioned state spaces"};
  app.require_subcommand(1);

  CommonOptions opts;
  std::string resume_stage;
  std::string x0_text;
  std::string policy = "random";
  int sim_count = 10;
  int sim_horizon = 0;

  auto* abstract_cmd =
      app.add_subcommand("abstract", "partition the spaces and build the posterior graph");
  add_common(abstract_cmd, opts);
  auto* safe_cmd = app.add_subcommand("safe-sets", "run the unsafe fixpoint");
  add_common(safe_cmd, opts);
  auto* assign_cmd =
      app.add_subcommand("assign", "predecessor graph, distances, partition assignment");
  add_common(assign_cmd, opts);
  auto* train_cmd = app.add_subcommand("train", "train and project the local networks");
  add_common(train_cmd, opts);
  auto* compose_cmd = app.add_subcommand("compose", "compose the gated global controller");
  add_common(compose_cmd, opts);
  auto* verify_cmd = app.add_subcommand("verify", "one-step reach checks and chain certification");
  add_common(verify_cmd, opts);
  auto* pipeline_cmd = app.add_subcommand("pipeline", "run every stage");
  add_common(pipeline_cmd, opts);
  pipeline_cmd->add_option("--resume", resume_stage,
                           "restart from this stage, loading earlier artifacts");
  auto* simulate_cmd = app.add_subcommand("simulate", "closed-loop rollouts of a composed controller");
  add_common(simulate_cmd, opts);
  simulate_cmd->add_option("--x0", x0_text, "comma-separated start state (default: sampled)");
  simulate_cmd->add_option("--count", sim_count, "number of sampled trajectories");
  simulate_cmd->add_option("--horizon", sim_horizon, "steps (default: spec horizon)");
  simulate_cmd->add_option("--policy", policy, "disturbance policy: none|worst-vertex|random");

  CLI11_PARSE(app, argc, argv);

  try {
    if (abstract_cmd->parsed()) return run_stages(opts, kAbstract, kAbstract);
    if (safe_cmd->parsed()) return run_stages(opts, kSafeSets, kSafeSets);
    if (assign_cmd->parsed()) return run_stages(opts, kAssign, kAssign);
    if (train_cmd->parsed()) return run_stages(opts, kTrain, kTrain);
    if (compose_cmd->parsed()) return run_stages(opts, kCompose, kCompose);
    if (verify_cmd->parsed()) return run_stages(opts, kVerify, kVerify);
    if (pipeline_cmd->parsed()) return cmd_pipeline(opts, resume_stage);
    if (simulate_cmd->parsed())
      return cmd_simulate(opts, x0_text, sim_count, sim_horizon, policy);
  } catch (const std::exception& e) {
    // Machine-readable error envelope on stderr.
    std::string kind = "error";
    if (dynamic_cast<const SpecValidationError*>(&e)) kind = "spec_validation";
    else if (dynamic_cast<const ProjectionInfeasible*>(&e)) kind = "projection_infeasible";
    else if (dynamic_cast<const TrainingDiverged*>(&e)) kind = "training_diverged";
    else if (dynamic_cast<const UnboundedPolytope*>(&e)) kind = "unbounded_polytope";
    std::string msg = e.what();
    for (char& c : msg)
      if (c == '"') c = '\'';
    std::cerr << "{\"error\": \"" << kind << "\", \"message\": \"" << msg << "\"}\n";
    return 1;
  }
  return 0;
}
