#include "cpwa/neural.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "cpwa/lp.hpp"
#include "cpwa/rng.hpp"

namespace cpwa {

Eigen::VectorXd ReluNet::hidden(const Eigen::VectorXd& x) const {
  return (W1 * x + b1).cwiseMax(0.0);
}

Eigen::VectorXd ReluNet::forward(const Eigen::VectorXd& x) const {
  return W2 * hidden(x) + b2;
}

ReluNet ReluNet::random(int n, int m, int width, std::uint64_t seed) {
  if (n < 1 || m < 1 || width < 1) throw std::invalid_argument("ReluNet::random: bad dimensions");
  Rng rng(seed);
  ReluNet net;
  net.W1.resize(width, n);
  net.b1.resize(width);
  net.W2.resize(m, width);
  net.b2.resize(m);
  for (int i = 0; i < width; ++i)
    for (int j = 0; j < n; ++j) net.W1(i, j) = rng.uniform(-0.5, 0.5);
  for (int i = 0; i < width; ++i) net.b1[i] = rng.uniform(-0.5, 0.5);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < width; ++j) net.W2(i, j) = rng.uniform(-0.5, 0.5);
  for (int i = 0; i < m; ++i) net.b2[i] = rng.uniform(-0.5, 0.5);
  return net;
}

namespace {

LinearRegion make_region(const ReluNet& net, std::vector<bool> pattern, HPolytope poly) {
  LinearRegion region;
  region.pattern = std::move(pattern);
  region.region = std::move(poly);
  const int width = net.hidden_width();
  region.G = Eigen::MatrixXd::Zero(width, net.input_dim());
  region.g = Eigen::VectorXd::Zero(width);
  for (int j = 0; j < width; ++j) {
    if (region.pattern[j]) {
      region.G.row(j) = net.W1.row(j);
      region.g[j] = net.b1[j];
    }
  }
  region.law.K = net.W2 * region.G;
  region.law.b = net.W2 * region.g + net.b2;
  return region;
}

}  // namespace

std::vector<LinearRegion> enumerate_regions(const ReluNet& net, const Box& q) {
  if (q.dim() != net.input_dim())
    throw std::invalid_argument("enumerate_regions: box/net dimension mismatch");
  std::vector<LinearRegion> out;
  struct Frame {
    std::vector<bool> pattern;
    HPolytope poly;
  };
  // Depth-first, inactive branch first, so leaves arrive in lexicographic
  // pattern order (false < true).
  std::vector<Frame> stack{{{}, HPolytope::from_box(q)}};
  while (!stack.empty()) {
    Frame frame = std::move(stack.back());
    stack.pop_back();
    const int j = static_cast<int>(frame.pattern.size());
    if (j == net.hidden_width()) {
      out.push_back(make_region(net, std::move(frame.pattern), std::move(frame.poly)));
      continue;
    }
    const Eigen::VectorXd w = net.W1.row(j).transpose();
    const double b = net.b1[j];
    // Active side w.x + b >= 0, inactive side w.x + b <= 0.
    HPolytope active = frame.poly.with_row(-w, b);
    HPolytope inactive = frame.poly.with_row(w, -b);
    const bool active_ok = !active.empty();
    const bool inactive_ok = !inactive.empty();
    // Push active first so the inactive branch is processed first.
    if (active_ok) {
      Frame f;
      f.pattern = frame.pattern;
      f.pattern.push_back(true);
      f.poly = std::move(active);
      stack.push_back(std::move(f));
    }
    if (inactive_ok) {
      Frame f;
      f.pattern = std::move(frame.pattern);
      f.pattern.push_back(false);
      f.poly = std::move(inactive);
      stack.push_back(std::move(f));
    }
  }
  return out;
}

int locate_region(const std::vector<LinearRegion>& regions, const Eigen::VectorXd& x, double tol) {
  for (std::size_t i = 0; i < regions.size(); ++i)
    if (regions[i].region.contains(x, tol)) return static_cast<int>(i);
  return -1;
}

ProjectionResult project_weights(const ReluNet& net, const std::vector<LinearRegion>& regions,
                                 const Box& q, const ControllerPartition& partition) {
  const int m = net.output_dim();
  const int width = net.hidden_width();
  const int n = net.input_dim();
  if (q.dim() != n) throw std::invalid_argument("project_weights: box/net dimension mismatch");
  if (regions.empty()) throw std::invalid_argument("project_weights: no regions over q");
  if (partition.param_dim() != m * (n + 1))
    throw std::invalid_argument("project_weights: partition dimension mismatch");

  // Hidden-layer outputs at all region vertices (deduplicated).
  std::vector<Eigen::VectorXd> verts;
  for (const LinearRegion& region : regions) {
    for (Eigen::VectorXd& v : vertices(region.region)) {
      bool dup = false;
      for (const auto& w : verts)
        if ((w - v).lpNorm<Eigen::Infinity>() < 1e-9) {
          dup = true;
          break;
        }
      if (!dup) verts.push_back(std::move(v));
    }
  }
  if (verts.empty()) throw std::invalid_argument("project_weights: regions have no vertices");

  // Variables: [W2 (m*width, row-major) | b2 (m) | t | s (m*width) | v (m)].
  const int off_w = 0;
  const int off_b = m * width;
  const int off_t = off_b + m;
  const int off_s = off_t + 1;
  const int off_v = off_s + m * width;
  const int num_vars = off_v + m;

  LpProblem lp(num_vars);
  lp.objective[off_t] = 1.0;
  for (int k = off_s; k < num_vars; ++k) lp.set_bounds(k, 0.0, kInf);

  // Epigraph rows: sum_ij s_ij h_j(x) + sum_i v_i <= t at every vertex.
  for (const Eigen::VectorXd& x : verts) {
    const Eigen::VectorXd h = net.hidden(x);
    Eigen::VectorXd row = Eigen::VectorXd::Zero(num_vars);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < width; ++j) row[off_s + i * width + j] = h[j];
    for (int i = 0; i < m; ++i) row[off_v + i] = 1.0;
    row[off_t] = -1.0;
    lp.add_le(row, 0.0);
  }
  // |W2' - W2| <= s and |b2' - b2| <= v as inequality pairs.
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < width; ++j) {
      const int w_idx = off_w + i * width + j;
      const int s_idx = off_s + i * width + j;
      Eigen::VectorXd row = Eigen::VectorXd::Zero(num_vars);
      row[w_idx] = 1.0;
      row[s_idx] = -1.0;
      lp.add_le(row, net.W2(i, j));
      row[w_idx] = -1.0;
      lp.add_le(row, -net.W2(i, j));
    }
    const int v_idx = off_v + i;
    Eigen::VectorXd row = Eigen::VectorXd::Zero(num_vars);
    row[off_b + i] = 1.0;
    row[v_idx] = -1.0;
    lp.add_le(row, net.b2[i]);
    row[off_b + i] = -1.0;
    lp.add_le(row, -net.b2[i]);
  }
  // Region-law membership: W2' G_r row-wise inside the K bounds, and
  // W2' g_r + b2' inside the b bounds.
  auto add_region_rows = [&](LpProblem& target, const LinearRegion& region) {
    for (int i = 0; i < m; ++i) {
      for (int col = 0; col < n; ++col) {
        Eigen::VectorXd row = Eigen::VectorXd::Zero(num_vars);
        for (int j = 0; j < width; ++j) row[off_w + i * width + j] = region.G(j, col);
        const int flat = i * n + col;
        target.add_le(row, partition.bounds.hi[flat]);
        target.add_le(-row, -partition.bounds.lo[flat]);
      }
      Eigen::VectorXd row = Eigen::VectorXd::Zero(num_vars);
      for (int j = 0; j < width; ++j) row[off_w + i * width + j] = region.g[j];
      row[off_b + i] = 1.0;
      const int flat = m * n + i;
      target.add_le(row, partition.bounds.hi[flat]);
      target.add_le(-row, -partition.bounds.lo[flat]);
    }
  };
  for (const LinearRegion& region : regions) add_region_rows(lp, region);

  const LpSolution sol = solve_lp(lp);
  if (sol.status == LpStatus::Infeasible) {
    // Diagnose: which regions are individually incompatible with the
    // partition; if each is fine alone, the conflict is joint.
    std::vector<int> blame;
    for (std::size_t r = 0; r < regions.size(); ++r) {
      LpProblem solo(num_vars);
      add_region_rows(solo, regions[r]);
      if (solve_lp(solo).status == LpStatus::Infeasible) blame.push_back(static_cast<int>(r));
    }
    if (blame.empty())
      for (std::size_t r = 0; r < regions.size(); ++r) blame.push_back(static_cast<int>(r));
    std::ostringstream msg;
    msg << "project_weights: infeasible for partition " << partition.id << " (" << blame.size()
        << " region(s) implicated)";
    throw ProjectionInfeasible(msg.str(), std::move(blame));
  }
  if (sol.status != LpStatus::Optimal)
    throw std::runtime_error("project_weights: LP failed with status " + to_string(sol.status));

  ProjectionResult out;
  out.W2.resize(m, width);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < width; ++j) out.W2(i, j) = sol.x[off_w + i * width + j];
  out.b2 = sol.x.segment(off_b, m);
  out.bound = sol.x[off_t];
  return out;
}

ProjectionResult project_weights(const ReluNet& net, const Box& q,
                                 const ControllerPartition& partition) {
  return project_weights(net, enumerate_regions(net, q), q, partition);
}

double deviation_bound_check(const ReluNet& before, const ReluNet& after, const Box& q,
                             const std::vector<LinearRegion>& regions) {
  if (before.W1 != after.W1 || before.b1 != after.b1)
    throw std::invalid_argument("deviation_bound_check: nets must share the hidden layer");
  (void)q;
  const Eigen::MatrixXd dW = (after.W2 - before.W2).cwiseAbs();
  const Eigen::VectorXd db = (after.b2 - before.b2).cwiseAbs();
  const double bias_term = db.sum();
  double bound = 0.0;
  bool any = false;
  for (const LinearRegion& region : regions) {
    for (const Eigen::VectorXd& v : vertices(region.region)) {
      const Eigen::VectorXd h = before.hidden(v);
      double val = bias_term;
      for (int i = 0; i < dW.rows(); ++i) val += dW.row(i).dot(h);
      bound = std::max(bound, val);
      any = true;
    }
  }
  if (!any) throw std::invalid_argument("deviation_bound_check: no region vertices");
  return bound;
}

namespace {

double halton(std::size_t index, int base) {
  double f = 1.0, r = 0.0;
  while (index > 0) {
    f /= base;
    r += f * (index % base);
    index /= base;
  }
  return r;
}

constexpr int kHaltonBases[] = {2, 3, 5, 7, 11, 13};

double angular_gap(double a, double b) {
  double d = std::fmod(std::abs(a - b), 2.0 * M_PI);
  return std::min(d, 2.0 * M_PI - d);
}

// Distance from a state to the goal box: Euclidean norm of per-axis gaps
// (wrapped on circular axes). For the unicycle a heading-alignment penalty is
// added: one step never moves the position as a function of u, so the raw gap
// cannot rank turn commands.
double goal_distance(const Eigen::VectorXd& x, const Box& goal, const SystemModel& model,
                     const StateSpace* space) {
  const std::vector<int>* circ = space ? &space->circular_axes() : nullptr;
  auto linear_gap = [](double v, double lo, double hi) {
    if (v < lo) return lo - v;
    if (v > hi) return v - hi;
    return 0.0;
  };
  double sq = 0.0;
  for (int axis = 0; axis < goal.dim(); ++axis) {
    double gap = linear_gap(x[axis], goal.lo[axis], goal.hi[axis]);
    if (gap > 0 && circ && std::find(circ->begin(), circ->end(), axis) != circ->end()) {
      const double period = space->bounds().width(axis);
      for (double shift : {-period, period})
        gap = std::min(gap, linear_gap(x[axis] + shift, goal.lo[axis], goal.hi[axis]));
    }
    sq += gap * gap;
  }
  double dist = std::sqrt(sq);
  if (model.kind == ModelKind::Unicycle) {
    const double bearing = std::atan2(goal.center()[1] - x[1], goal.center()[0] - x[0]);
    dist += 0.05 * angular_gap(x[2], bearing);
  }
  return dist;
}

}  // namespace

std::vector<ExpertSample> generate_expert_data(const Box& q, const ControllerPartition& partition,
                                               const SystemModel& model, const Box& goal, int count,
                                               std::uint64_t seed, const StateSpace* space) {
  if (count < 1) throw std::invalid_argument("generate_expert_data: count must be >= 1");
  if (q.dim() > 6) throw std::invalid_argument("generate_expert_data: dimension above Halton bases");
  const std::vector<Eigen::VectorXd> candidates = law_grid(partition, 3);
  const std::size_t offset = static_cast<std::size_t>(seed % 9973) + 1;

  std::vector<ExpertSample> out;
  out.reserve(count);
  for (int k = 0; k < count; ++k) {
    Eigen::VectorXd x(q.dim());
    for (int axis = 0; axis < q.dim(); ++axis)
      x[axis] = q.lo[axis] + q.width(axis) * halton(offset + k, kHaltonBases[axis]);
    int best = -1;
    double best_dist = 0.0;
    for (std::size_t c = 0; c < candidates.size(); ++c) {
      const AffineLaw law = unflatten_law(candidates[c], model.n, model.m);
      const double d = goal_distance(step(model, x, law.apply(x)), goal, model, space);
      if (best < 0 || d < best_dist) {
        best = static_cast<int>(c);
        best_dist = d;
      }
    }
    const AffineLaw law = unflatten_law(candidates[best], model.n, model.m);
    out.push_back({x, law.apply(x), candidates[best]});
  }
  return out;
}

TrainResult constrained_train(ReluNet net, const std::vector<ExpertSample>& data, int epochs,
                              double lr) {
  TrainResult result;
  result.loss.reserve(epochs);
  const int batch = static_cast<int>(data.size());
  if (batch == 0 || epochs == 0) {
    result.net = std::move(net);
    return result;
  }
  const int m = net.output_dim();
  const int width = net.hidden_width();
  const int n = net.input_dim();

  for (int epoch = 0; epoch < epochs; ++epoch) {
    Eigen::MatrixXd gW1 = Eigen::MatrixXd::Zero(width, n);
    Eigen::VectorXd gb1 = Eigen::VectorXd::Zero(width);
    Eigen::MatrixXd gW2 = Eigen::MatrixXd::Zero(m, width);
    Eigen::VectorXd gb2 = Eigen::VectorXd::Zero(m);
    double loss = 0.0;
    for (const ExpertSample& sample : data) {
      const Eigen::VectorXd z = net.W1 * sample.x + net.b1;
      const Eigen::VectorXd h = z.cwiseMax(0.0);
      const Eigen::VectorXd err = net.W2 * h + net.b2 - sample.u;
      loss += err.squaredNorm();
      const Eigen::VectorXd dout = 2.0 * err / batch;
      gW2 += dout * h.transpose();
      gb2 += dout;
      Eigen::VectorXd dh = net.W2.transpose() * dout;
      for (int j = 0; j < width; ++j)
        if (z[j] <= 0.0) dh[j] = 0.0;
      gW1 += dh * sample.x.transpose();
      gb1 += dh;
    }
    loss /= batch;
    if (!std::isfinite(loss)) throw TrainingDiverged("constrained_train: loss diverged to non-finite");
    result.loss.push_back(loss);
    net.W1 -= lr * gW1;
    net.b1 -= lr * gb1;
    net.W2 -= lr * gW2;
    net.b2 -= lr * gb2;
  }
  result.net = std::move(net);
  return result;
}

SafeTrainResult safe_train(const Box& q, const ControllerPartition& partition,
                           const SystemModel& model, const Box& goal, const TrainConfig& config,
                           const StateSpace* space) {
  if (config.max_iter < 1) throw std::invalid_argument("safe_train: max_iter must be >= 1");
  ReluNet net = ReluNet::random(model.n, model.m, config.hidden_width, config.seed);
  const std::vector<ExpertSample> data =
      generate_expert_data(q, partition, model, goal, config.samples, mix_seed(config.seed, 1), space);

  SafeTrainResult out;
  for (int iter = 0; iter < config.max_iter; ++iter) {
    TrainResult trained = constrained_train(std::move(net), data, config.epochs, config.lr);
    net = std::move(trained.net);
    out.final_loss = trained.loss.empty() ? 0.0 : trained.loss.back();
    const std::vector<LinearRegion> regions = enumerate_regions(net, q);
    const ProjectionResult proj = project_weights(net, regions, q, partition);
    net.W2 = proj.W2;
    net.b2 = proj.b2;
    out.bound = proj.bound;
  }
  out.net = std::move(net);
  return out;
}

GlobalController::Eval GlobalController::evaluate(const Eigen::VectorXd& x) const {
  Eval out;
  const Eigen::VectorXd y =
      circular_axes.empty() ? x : wrap_point(x, bounds, circular_axes);
  // Exact containment first; a 1e-9 retry absorbs rounding at the outer walls
  // (matching the escape tolerance of the posterior graph).
  for (double tol : {0.0, 1e-9}) {
    for (const Module& module : modules) {
      if (module.gate.contains(y, tol)) {
        out.inside = true;
        out.state_id = module.state_id;
        out.u = module.net.forward(y);
        return out;
      }
    }
  }
  return out;
}

GlobalController compose_global(const std::map<int, ReluNet>& locals, const StateSpace& space,
                                const std::map<int, int>& partition_of) {
  GlobalController gc;
  gc.bounds = space.bounds();
  gc.circular_axes = space.circular_axes();
  for (const auto& [state_id, net] : locals) {
    if (state_id < 0 || state_id >= space.num_states())
      throw std::invalid_argument("compose_global: unknown state id");
    GlobalController::Module module;
    module.state_id = state_id;
    module.gate = space.state(state_id).region;
    module.net = net;
    const auto it = partition_of.find(state_id);
    if (it != partition_of.end()) module.partition_id = it->second;
    gc.modules.push_back(std::move(module));
  }
  std::sort(gc.modules.begin(), gc.modules.end(),
            [](const auto& a, const auto& b) { return a.state_id < b.state_id; });
  return gc;
}

bool reach_check(const Box& q, const ReluNet& net, const SystemModel& model,
                 const std::vector<Box>& targets, const StateSpace* space) {
  const std::vector<LinearRegion> regions = enumerate_regions(net, q);
  for (const LinearRegion& region : regions) {
    const Box cell = bounding_box(region.region);
    const Eigen::VectorXd flat = flatten_law(region.law);
    ControllerPartition singleton{0, Box(flat, flat)};
    const Box post = interval_post(model, cell, singleton);
    const std::vector<Box> pieces = space ? space->wrap_pieces(post) : std::vector<Box>{post};
    for (const Box& piece : pieces)
      if (!box_covered(piece, targets, 1e-9)) return false;
  }
  return true;
}

}  // namespace cpwa
