#include "cpwa/serialization.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace cpwa {

using Json = nlohmann::ordered_json;

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open file for reading: " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open file for writing: " + path);
  out << content;
  if (!out) throw std::runtime_error("write failed: " + path);
}

namespace {

Json box_to_json(const Box& b) {
  Json j;
  j["lo"] = std::vector<double>(b.lo.data(), b.lo.data() + b.lo.size());
  j["hi"] = std::vector<double>(b.hi.data(), b.hi.data() + b.hi.size());
  return j;
}

Box box_from_json(const Json& j) {
  const auto lo = j.at("lo").get<std::vector<double>>();
  const auto hi = j.at("hi").get<std::vector<double>>();
  return Box(Eigen::Map<const Eigen::VectorXd>(lo.data(), lo.size()),
             Eigen::Map<const Eigen::VectorXd>(hi.data(), hi.size()));
}

Json vector_to_json(const Eigen::VectorXd& v) {
  return std::vector<double>(v.data(), v.data() + v.size());
}

Eigen::VectorXd vector_from_json(const Json& j) {
  const auto data = j.get<std::vector<double>>();
  return Eigen::Map<const Eigen::VectorXd>(data.data(), data.size());
}

Json matrix_to_json(const Eigen::MatrixXd& m) {
  Json j;
  j["rows"] = m.rows();
  j["cols"] = m.cols();
  std::vector<double> data;
  data.reserve(m.size());
  for (Eigen::Index r = 0; r < m.rows(); ++r)
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  j["data"] = data;
  return j;
}

Eigen::MatrixXd matrix_from_json(const Json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (static_cast<Eigen::Index>(data.size()) != rows * cols)
    throw std::runtime_error("matrix payload size mismatch");
  Eigen::MatrixXd m(rows, cols);
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < rows; ++r)
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = data[k++];
  return m;
}

Json net_to_json(const ReluNet& net) {
  Json j;
  j["W1"] = matrix_to_json(net.W1);
  j["b1"] = vector_to_json(net.b1);
  j["W2"] = matrix_to_json(net.W2);
  j["b2"] = vector_to_json(net.b2);
  return j;
}

ReluNet net_from_json(const Json& j) {
  ReluNet net;
  net.W1 = matrix_from_json(j.at("W1"));
  net.b1 = vector_from_json(j.at("b1"));
  net.W2 = matrix_from_json(j.at("W2"));
  net.b2 = vector_from_json(j.at("b2"));
  return net;
}

Json partitions_to_json(const std::vector<ControllerPartition>& partitions) {
  Json arr = Json::array();
  for (const auto& p : partitions) {
    Json j;
    j["id"] = p.id;
    j["bounds"] = box_to_json(p.bounds);
    arr.push_back(std::move(j));
  }
  return arr;
}

std::vector<ControllerPartition> partitions_from_json(const Json& arr) {
  std::vector<ControllerPartition> out;
  for (const auto& j : arr) out.push_back({j.at("id").get<int>(), box_from_json(j.at("bounds"))});
  return out;
}

std::string model_kind_name(ModelKind kind) {
  return kind == ModelKind::Unicycle ? "unicycle" : "integrator_chain";
}

ModelKind model_kind_from_name(const std::string& name) {
  if (name == "unicycle") return ModelKind::Unicycle;
  if (name == "integrator_chain") return ModelKind::IntegratorChain;
  throw SpecValidationError("unknown model kind: " + name);
}

}  // namespace

std::string spec_to_json(const WorkspaceSpec& spec) {
  Json j;
  j["name"] = spec.name;
  Json model;
  model["kind"] = model_kind_name(spec.model_kind);
  model["speed"] = spec.speed;
  model["dt"] = spec.dt;
  model["chain_n"] = spec.chain_n;
  model["chain_m"] = spec.chain_m;
  model["disturbance"] = spec.disturbance ? box_to_json(*spec.disturbance) : Json(nullptr);
  j["model"] = std::move(model);

  Json state;
  state["bounds"] = box_to_json(spec.state_bounds);
  Json partition;
  if (!spec.state_partition.uniform_counts.empty())
    partition["uniform"] = spec.state_partition.uniform_counts;
  else
    partition["cuts"] = spec.state_partition.cuts;
  state["partition"] = std::move(partition);
  state["circular_axes"] = spec.circular_axes;
  state["goal"] = box_to_json(spec.goal);
  Json obstacles = Json::array();
  for (const Box& obs : spec.obstacles) obstacles.push_back(box_to_json(obs));
  state["obstacles"] = std::move(obstacles);
  j["state"] = std::move(state);

  Json controller;
  controller["bounds"] = box_to_json(spec.controller_bounds);
  controller["counts"] = spec.controller_counts;
  j["controller"] = std::move(controller);

  j["horizon"] = spec.horizon;

  Json training;
  training["hidden_width"] = spec.training.hidden_width;
  training["epochs"] = spec.training.epochs;
  training["lr"] = spec.training.lr;
  training["max_iter"] = spec.training.max_iter;
  training["samples"] = spec.training.samples;
  training["retrain_attempts"] = spec.retrain_attempts;
  j["training"] = std::move(training);

  Json sampling;
  sampling["state_grid"] = spec.sampling.state_grid;
  sampling["law_grid"] = spec.sampling.law_grid;
  sampling["measure_grid"] = spec.sampling.measure_grid;
  j["sampling"] = std::move(sampling);

  j["seed"] = spec.seed;
  return j.dump(2) + "\n";
}

WorkspaceSpec spec_from_json_string(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw SpecValidationError(std::string("spec parse error: ") + e.what());
  }
  WorkspaceSpec spec;
  try {
    spec.name = j.value("name", std::string{});
    const Json& model = j.at("model");
    spec.model_kind = model_kind_from_name(model.at("kind").get<std::string>());
    spec.speed = model.value("speed", 1.0);
    spec.dt = model.at("dt").get<double>();
    spec.chain_n = model.value("chain_n", 2);
    spec.chain_m = model.value("chain_m", 2);
    if (model.contains("disturbance") && !model.at("disturbance").is_null())
      spec.disturbance = box_from_json(model.at("disturbance"));

    const Json& state = j.at("state");
    spec.state_bounds = box_from_json(state.at("bounds"));
    const Json& partition = state.at("partition");
    if (partition.contains("uniform"))
      spec.state_partition.uniform_counts = partition.at("uniform").get<std::vector<int>>();
    else
      spec.state_partition.cuts = partition.at("cuts").get<std::vector<std::vector<double>>>();
    spec.circular_axes = state.value("circular_axes", std::vector<int>{});
    spec.goal = box_from_json(state.at("goal"));
    if (state.contains("obstacles"))
      for (const auto& obs : state.at("obstacles")) spec.obstacles.push_back(box_from_json(obs));

    const Json& controller = j.at("controller");
    spec.controller_bounds = box_from_json(controller.at("bounds"));
    spec.controller_counts = controller.at("counts").get<std::vector<int>>();

    spec.horizon = j.at("horizon").get<int>();

    if (j.contains("training")) {
      const Json& training = j.at("training");
      spec.training.hidden_width = training.value("hidden_width", spec.training.hidden_width);
      spec.training.epochs = training.value("epochs", spec.training.epochs);
      spec.training.lr = training.value("lr", spec.training.lr);
      spec.training.max_iter = training.value("max_iter", spec.training.max_iter);
      spec.training.samples = training.value("samples", spec.training.samples);
      spec.retrain_attempts = training.value("retrain_attempts", spec.retrain_attempts);
    }
    if (j.contains("sampling")) {
      const Json& sampling = j.at("sampling");
      spec.sampling.state_grid = sampling.value("state_grid", spec.sampling.state_grid);
      spec.sampling.law_grid = sampling.value("law_grid", spec.sampling.law_grid);
      spec.sampling.measure_grid = sampling.value("measure_grid", spec.sampling.measure_grid);
    }
    spec.seed = j.value("seed", std::uint64_t{0});
  } catch (const Json::exception& e) {
    throw SpecValidationError(std::string("spec field error: ") + e.what());
  }
  return spec;
}

WorkspaceSpec load_spec(const std::string& path) {
  WorkspaceSpec spec = spec_from_json_string(read_file(path));
  validate(spec);
  return spec;
}

void save_spec(const WorkspaceSpec& spec, const std::string& path) {
  write_file(path, spec_to_json(spec));
}

std::string abstraction_to_json(const StateSpace& space, const PosteriorGraph& graph) {
  Json j;
  j["bounds"] = box_to_json(space.bounds());
  Json cuts = Json::array();
  for (const auto& lines : space.grid_lines())
    cuts.push_back(std::vector<double>(lines.begin() + 1, lines.end() - 1));
  j["cuts"] = std::move(cuts);
  j["circular_axes"] = space.circular_axes();
  j["goal"] = box_to_json(space.state(space.goal_id()).region);
  Json obstacles = Json::array();
  for (int id : space.obstacle_ids()) obstacles.push_back(box_to_json(space.state(id).region));
  j["obstacles"] = std::move(obstacles);

  Json states = Json::array();
  for (const AbstractState& s : graph.states) {
    Json sj;
    sj["id"] = s.id;
    sj["kind"] = to_string(s.kind);
    sj["region"] = box_to_json(s.region);
    states.push_back(std::move(sj));
  }
  j["states"] = std::move(states);
  j["partitions"] = partitions_to_json(graph.partitions);
  j["out_of_bounds_id"] = graph.out_of_bounds_id;
  j["edges"] = graph.edges;
  j["has_posts"] = graph.has_posts;
  if (graph.has_posts) {
    Json posts = Json::array();
    for (const auto& row : graph.posts) {
      Json prow = Json::array();
      for (const Box& b : row) prow.push_back(b.dim() == 0 ? Json(nullptr) : box_to_json(b));
      posts.push_back(std::move(prow));
    }
    j["posts"] = std::move(posts);
  }
  return j.dump() + "\n";
}

AbstractionArtifact abstraction_from_json_string(const std::string& text) {
  const Json j = Json::parse(text);
  PartitionScheme scheme;
  scheme.cuts = j.at("cuts").get<std::vector<std::vector<double>>>();
  std::vector<Box> obstacles;
  for (const auto& obs : j.at("obstacles")) obstacles.push_back(box_from_json(obs));
  AbstractionArtifact artifact;
  artifact.space = StateSpace::build(box_from_json(j.at("bounds")), scheme,
                                     box_from_json(j.at("goal")), obstacles,
                                     j.at("circular_axes").get<std::vector<int>>());
  PosteriorGraph& graph = artifact.graph;
  for (const auto& sj : j.at("states"))
    graph.states.push_back({sj.at("id").get<int>(),
                            box_from_json(sj.at("region")),
                            sj.at("kind").get<std::string>() == "goal"
                                ? StateKind::Goal
                                : (sj.at("kind").get<std::string>() == "obstacle"
                                       ? StateKind::Obstacle
                                       : StateKind::Normal)});
  graph.partitions = partitions_from_json(j.at("partitions"));
  graph.out_of_bounds_id = j.at("out_of_bounds_id").get<int>();
  graph.edges = j.at("edges").get<std::vector<std::vector<std::vector<int>>>>();
  graph.has_posts = j.at("has_posts").get<bool>();
  if (graph.has_posts) {
    for (const auto& prow : j.at("posts")) {
      std::vector<Box> row;
      for (const auto& pj : prow) row.push_back(pj.is_null() ? Box() : box_from_json(pj));
      graph.posts.push_back(std::move(row));
    }
  }
  return artifact;
}

std::string safe_sets_to_json(const SafeSets& safe) {
  Json j;
  j["x_unsafe"] = safe.x_unsafe;
  j["x_safe"] = safe.x_safe;
  j["p_safe"] = safe.p_safe;
  j["iterations"] = safe.iterations;
  return j.dump() + "\n";
}

SafeSets safe_sets_from_json_string(const std::string& text) {
  const Json j = Json::parse(text);
  SafeSets safe;
  safe.x_unsafe = j.at("x_unsafe").get<std::vector<int>>();
  safe.x_safe = j.at("x_safe").get<std::vector<int>>();
  safe.p_safe = j.at("p_safe").get<std::vector<std::vector<int>>>();
  safe.iterations = j.at("iterations").get<int>();
  const int total = static_cast<int>(safe.x_unsafe.size() + safe.x_safe.size());
  safe.unsafe_mask.assign(total, 0);
  for (int q : safe.x_unsafe)
    if (q >= 0 && q < total) safe.unsafe_mask[q] = 1;
  return safe;
}

std::string pred_graph_to_json(const PredecessorGraph& pred) {
  Json j;
  j["num_states"] = pred.num_states;
  j["goal_id"] = pred.goal_id;
  Json edges = Json::array();
  for (const auto& per_state : pred.edges) {
    Json state_row = Json::array();
    for (const auto& per_partition : per_state) {
      Json part_row = Json::array();
      for (const PredEdge& e : per_partition) {
        Json ej;
        ej["target"] = e.target;
        ej["x"] = vector_to_json(e.witness_x);
        ej["law"] = vector_to_json(e.witness_law);
        part_row.push_back(std::move(ej));
      }
      state_row.push_back(std::move(part_row));
    }
    edges.push_back(std::move(state_row));
  }
  j["edges"] = std::move(edges);
  return j.dump() + "\n";
}

PredecessorGraph pred_graph_from_json_string(const std::string& text) {
  const Json j = Json::parse(text);
  PredecessorGraph pred;
  pred.num_states = j.at("num_states").get<int>();
  pred.goal_id = j.at("goal_id").get<int>();
  for (const auto& state_row : j.at("edges")) {
    std::vector<std::vector<PredEdge>> per_state;
    for (const auto& part_row : state_row) {
      std::vector<PredEdge> per_partition;
      for (const auto& ej : part_row)
        per_partition.push_back({ej.at("target").get<int>(), vector_from_json(ej.at("x")),
                                 vector_from_json(ej.at("law"))});
      per_state.push_back(std::move(per_partition));
    }
    pred.edges.push_back(std::move(per_state));
  }
  return pred;
}

std::string assignment_to_json(const Assignment& assignment) {
  Json j;
  j["dist"] = assignment.dist;
  j["p_star"] = assignment.p_star;
  Json ranking = Json::array();
  for (const auto& per_state : assignment.ranking) {
    Json row = Json::array();
    for (const auto& [p, score] : per_state) {
      Json e;
      e["partition"] = p;
      e["score"] = score;
      row.push_back(std::move(e));
    }
    ranking.push_back(std::move(row));
  }
  j["ranking"] = std::move(ranking);
  j["live"] = std::vector<int>(assignment.live.begin(), assignment.live.end());
  return j.dump() + "\n";
}

Assignment assignment_from_json_string(const std::string& text) {
  const Json j = Json::parse(text);
  Assignment assignment;
  assignment.dist = j.at("dist").get<std::vector<int>>();
  assignment.p_star = j.at("p_star").get<std::vector<int>>();
  for (const auto& row : j.at("ranking")) {
    std::vector<std::pair<int, double>> per_state;
    for (const auto& e : row)
      per_state.emplace_back(e.at("partition").get<int>(), e.at("score").get<double>());
    assignment.ranking.push_back(std::move(per_state));
  }
  const auto live = j.at("live").get<std::vector<int>>();
  assignment.live.assign(live.begin(), live.end());
  return assignment;
}

std::string nets_to_json(const std::map<int, ReluNet>& locals,
                         const std::map<int, int>& partition_of, std::uint64_t seed) {
  Json j;
  j["seed"] = seed;
  Json nets = Json::array();
  for (const auto& [state_id, net] : locals) {
    Json e;
    e["state"] = state_id;
    const auto it = partition_of.find(state_id);
    e["partition"] = it == partition_of.end() ? -1 : it->second;
    e["net"] = net_to_json(net);
    nets.push_back(std::move(e));
  }
  j["nets"] = std::move(nets);
  return j.dump() + "\n";
}

void nets_from_json_string(const std::string& text, std::map<int, ReluNet>& locals,
                           std::map<int, int>& partition_of, std::uint64_t& seed) {
  const Json j = Json::parse(text);
  seed = j.at("seed").get<std::uint64_t>();
  locals.clear();
  partition_of.clear();
  for (const auto& e : j.at("nets")) {
    const int state_id = e.at("state").get<int>();
    locals[state_id] = net_from_json(e.at("net"));
    partition_of[state_id] = e.at("partition").get<int>();
  }
}

std::string controller_to_json(const GlobalController& controller) {
  Json j;
  j["bounds"] = box_to_json(controller.bounds);
  j["circular_axes"] = controller.circular_axes;
  Json modules = Json::array();
  for (const auto& module : controller.modules) {
    Json e;
    e["state"] = module.state_id;
    e["partition"] = module.partition_id;
    e["gate"] = box_to_json(module.gate);
    e["net"] = net_to_json(module.net);
    modules.push_back(std::move(e));
  }
  j["modules"] = std::move(modules);
  return j.dump() + "\n";
}

GlobalController controller_from_json_string(const std::string& text) {
  const Json j = Json::parse(text);
  GlobalController controller;
  controller.bounds = box_from_json(j.at("bounds"));
  controller.circular_axes = j.at("circular_axes").get<std::vector<int>>();
  for (const auto& e : j.at("modules")) {
    GlobalController::Module module;
    module.state_id = e.at("state").get<int>();
    module.partition_id = e.at("partition").get<int>();
    module.gate = box_from_json(e.at("gate"));
    module.net = net_from_json(e.at("net"));
    controller.modules.push_back(std::move(module));
  }
  return controller;
}

std::string reach_report_to_json(const std::vector<ReachReport>& reach,
                                 const std::vector<char>& chain_certified) {
  Json j;
  Json rows = Json::array();
  for (const ReachReport& r : reach) {
    Json e;
    e["state"] = r.state_id;
    e["partition"] = r.partition_id;
    e["attempts"] = r.attempts;
    e["passed"] = r.passed;
    rows.push_back(std::move(e));
  }
  j["reach"] = std::move(rows);
  j["chain_certified"] = std::vector<int>(chain_certified.begin(), chain_certified.end());
  return j.dump() + "\n";
}

void reach_report_from_json_string(const std::string& text, std::vector<ReachReport>& reach,
                                   std::vector<char>& chain_certified) {
  const Json j = Json::parse(text);
  reach.clear();
  for (const auto& e : j.at("reach")) {
    ReachReport r;
    r.state_id = e.at("state").get<int>();
    r.partition_id = e.at("partition").get<int>();
    r.attempts = e.at("attempts").get<int>();
    r.passed = e.at("passed").get<bool>();
    reach.push_back(r);
  }
  const auto chain = j.at("chain_certified").get<std::vector<int>>();
  chain_certified.assign(chain.begin(), chain.end());
}

std::string timings_to_json(const std::vector<StageTiming>& timings) {
  Json j = Json::array();
  for (const StageTiming& t : timings) {
    Json e;
    e["stage"] = t.stage;
    e["seconds"] = t.seconds;
    j.push_back(std::move(e));
  }
  return j.dump(2) + "\n";
}

namespace {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::string trajectory_to_csv(const Trajectory& trajectory, int n, int m) {
  std::ostringstream out;
  out << "t";
  for (int i = 1; i <= n; ++i) out << ",x" << i;
  for (int i = 1; i <= m; ++i) out << ",u" << i;
  out << ",safe,goal_reached\n";
  for (std::size_t t = 0; t < trajectory.states.size(); ++t) {
    out << t;
    for (int i = 0; i < n; ++i) out << "," << format_double(trajectory.states[t][i]);
    for (int i = 0; i < m; ++i) {
      out << ",";
      if (t < trajectory.inputs.size()) out << format_double(trajectory.inputs[t][i]);
    }
    out << "," << static_cast<int>(trajectory.row_safe[t]) << ","
        << static_cast<int>(trajectory.row_goal[t]) << "\n";
  }
  return out.str();
}

}  // namespace cpwa
