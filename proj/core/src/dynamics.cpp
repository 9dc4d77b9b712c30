#include "cpwa/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace cpwa {

namespace {
constexpr double kPostSlack = 1e-12;
}

Interval interval_mul(const Interval& a, const Interval& b) {
  const double p1 = a.lo * b.lo, p2 = a.lo * b.hi, p3 = a.hi * b.lo, p4 = a.hi * b.hi;
  return {std::min(std::min(p1, p2), std::min(p3, p4)),
          std::max(std::max(p1, p2), std::max(p3, p4))};
}

Interval interval_cos(const Interval& theta) {
  if (theta.width() >= 2.0 * M_PI) return {-1.0, 1.0};
  double lo = std::min(std::cos(theta.lo), std::cos(theta.hi));
  double hi = std::max(std::cos(theta.lo), std::cos(theta.hi));
  // cos has extrema exactly at integer multiples of pi.
  const long k_lo = static_cast<long>(std::ceil(theta.lo / M_PI));
  const long k_hi = static_cast<long>(std::floor(theta.hi / M_PI));
  for (long k = k_lo; k <= k_hi; ++k) {
    if ((k % 2 + 2) % 2 == 0)
      hi = 1.0;
    else
      lo = -1.0;
  }
  return {lo, hi};
}

Interval interval_sin(const Interval& theta) {
  return interval_cos({theta.lo - M_PI / 2.0, theta.hi - M_PI / 2.0});
}

AffineLaw unflatten_law(const Eigen::VectorXd& flat, int n, int m) {
  if (flat.size() != m * (n + 1))
    throw std::invalid_argument("unflatten_law: expected m*(n+1) parameters");
  AffineLaw law;
  law.K.resize(m, n);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) law.K(i, j) = flat[i * n + j];
  law.b = flat.segment(m * n, m);
  return law;
}

Eigen::VectorXd flatten_law(const AffineLaw& law) {
  const int m = static_cast<int>(law.K.rows());
  const int n = static_cast<int>(law.K.cols());
  Eigen::VectorXd flat(m * (n + 1));
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) flat[i * n + j] = law.K(i, j);
  flat.segment(m * n, m) = law.b;
  return flat;
}

SystemModel SystemModel::unicycle(double v, double dt, std::optional<Box> disturbance) {
  SystemModel model;
  model.kind = ModelKind::Unicycle;
  model.n = 3;
  model.m = 1;
  model.dt = dt;
  model.speed = v;
  model.disturbance = std::move(disturbance);
  if (model.disturbance && model.disturbance->dim() != 3)
    throw std::invalid_argument("unicycle: disturbance must be 3-dimensional");
  return model;
}

SystemModel SystemModel::integrator_chain(int n, int m, double dt, std::optional<Box> disturbance) {
  if (n < 1 || m < 1) throw std::invalid_argument("integrator_chain: n, m must be positive");
  SystemModel model;
  model.kind = ModelKind::IntegratorChain;
  model.n = n;
  model.m = m;
  model.dt = dt;
  model.disturbance = std::move(disturbance);
  if (model.disturbance && model.disturbance->dim() != n)
    throw std::invalid_argument("integrator_chain: disturbance dimension mismatch");
  return model;
}

Eigen::MatrixXd SystemModel::input_matrix() const {
  Eigen::MatrixXd B = Eigen::MatrixXd::Zero(n, m);
  for (int i = 0; i < n; ++i) B(i, i % m) = dt;
  return B;
}

Eigen::VectorXd step(const SystemModel& model, const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                     const Eigen::VectorXd& w) {
  if (x.size() != model.n || u.size() != model.m || w.size() != model.n)
    throw std::invalid_argument("step: dimension mismatch");
  Eigen::VectorXd next(model.n);
  switch (model.kind) {
    case ModelKind::Unicycle:
      next[0] = x[0] + model.dt * model.speed * std::cos(x[2]);
      next[1] = x[1] + model.dt * model.speed * std::sin(x[2]);
      next[2] = x[2] + model.dt * u[0];
      break;
    case ModelKind::IntegratorChain:
      next = x + model.input_matrix() * u;
      break;
  }
  return next + w;
}

Eigen::VectorXd step(const SystemModel& model, const Eigen::VectorXd& x, const Eigen::VectorXd& u) {
  return step(model, x, u, Eigen::VectorXd::Zero(model.n));
}

Box control_range(const Box& q, const ControllerPartition& partition) {
  const int n = q.dim();
  if (partition.param_dim() % (n + 1) != 0)
    throw std::invalid_argument("control_range: partition/state dimension mismatch");
  const int m = partition.param_dim() / (n + 1);
  Eigen::VectorXd lo(m), hi(m);
  for (int i = 0; i < m; ++i) {
    Interval u{partition.bounds.lo[m * n + i], partition.bounds.hi[m * n + i]};  // bias entry
    for (int j = 0; j < n; ++j) {
      const int idx = i * n + j;
      const Interval k{partition.bounds.lo[idx], partition.bounds.hi[idx]};
      const Interval xj{q.lo[j], q.hi[j]};
      u = u + interval_mul(k, xj);
    }
    lo[i] = u.lo;
    hi[i] = u.hi;
  }
  return Box(std::move(lo), std::move(hi));
}

namespace {

Box interval_post_core(const SystemModel& model, const Box& q, const ControllerPartition& partition,
                       bool include_disturbance) {
  if (q.dim() != model.n) throw std::invalid_argument("interval_post: state dimension mismatch");
  const Box u = control_range(q, partition);
  Eigen::VectorXd lo(model.n), hi(model.n);
  switch (model.kind) {
    case ModelKind::Unicycle: {
      const Interval theta{q.lo[2], q.hi[2]};
      const Interval c = interval_cos(theta).scaled(model.dt * model.speed);
      const Interval s = interval_sin(theta).scaled(model.dt * model.speed);
      const Interval du = Interval{u.lo[0], u.hi[0]}.scaled(model.dt);
      lo[0] = q.lo[0] + c.lo;
      hi[0] = q.hi[0] + c.hi;
      lo[1] = q.lo[1] + s.lo;
      hi[1] = q.hi[1] + s.hi;
      lo[2] = q.lo[2] + du.lo;
      hi[2] = q.hi[2] + du.hi;
      break;
    }
    case ModelKind::IntegratorChain: {
      const Eigen::MatrixXd B = model.input_matrix();
      for (int i = 0; i < model.n; ++i) {
        Interval acc{q.lo[i], q.hi[i]};
        for (int j = 0; j < model.m; ++j)
          acc = acc + Interval{u.lo[j], u.hi[j]}.scaled(B(i, j));
        lo[i] = acc.lo;
        hi[i] = acc.hi;
      }
      break;
    }
  }
  if (include_disturbance && model.disturbance) {
    lo += model.disturbance->lo;
    hi += model.disturbance->hi;
  }
  lo.array() -= kPostSlack;
  hi.array() += kPostSlack;
  return Box(std::move(lo), std::move(hi));
}

}  // namespace

Box interval_post(const SystemModel& model, const Box& q, const ControllerPartition& partition) {
  return interval_post_core(model, q, partition, true);
}

std::vector<Eigen::VectorXd> law_grid(const ControllerPartition& partition, int k_grid) {
  if (k_grid < 2) throw std::invalid_argument("law_grid: resolution must be at least 2 per axis");
  const int d = partition.param_dim();
  std::vector<Eigen::VectorXd> out;
  std::vector<int> odo(d, 0);
  for (;;) {
    Eigen::VectorXd p(d);
    for (int i = 0; i < d; ++i) {
      const double t = static_cast<double>(odo[i]) / (k_grid - 1);
      p[i] = partition.bounds.lo[i] + t * (partition.bounds.hi[i] - partition.bounds.lo[i]);
    }
    out.push_back(std::move(p));
    int pos = d - 1;
    while (pos >= 0 && odo[pos] == k_grid - 1) odo[pos--] = 0;
    if (pos < 0) break;
    ++odo[pos];
  }
  const Eigen::VectorXd center = partition.bounds.center();
  bool have_center = false;
  for (const auto& p : out)
    if ((p - center).lpNorm<Eigen::Infinity>() < 1e-12) {
      have_center = true;
      break;
    }
  if (!have_center) out.push_back(center);
  return out;
}

std::optional<AffineLaw> pre_witness(const SystemModel& model, const Eigen::VectorXd& x,
                                     const Box& q_target, const ControllerPartition& partition,
                                     int k_grid) {
  // Quick sound reject: the disturbance-free interval image of {x} contains
  // every candidate next state.
  const Box point(x, x);
  if (!box_intersects(q_target, interval_post_core(model, point, partition, false)))
    return std::nullopt;
  for (const Eigen::VectorXd& flat : law_grid(partition, k_grid)) {
    const AffineLaw law = unflatten_law(flat, model.n, model.m);
    if (q_target.contains(step(model, x, law.apply(x)))) return law;
  }
  return std::nullopt;
}

bool pre_membership(const SystemModel& model, const Eigen::VectorXd& x, const Box& q_target,
                    const ControllerPartition& partition, int k_grid) {
  return pre_witness(model, x, q_target, partition, k_grid).has_value();
}

}  // namespace cpwa
