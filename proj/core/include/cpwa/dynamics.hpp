#ifndef CPWA_DYNAMICS_HPP
#define CPWA_DYNAMICS_HPP

#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "cpwa/geometry.hpp"

namespace cpwa {

/// Scalar interval [lo, hi] used by the one-step over-approximation.
struct Interval {
  double lo = 0.0;
  double hi = 0.0;

  double width() const { return hi - lo; }
  Interval operator+(const Interval& o) const { return {lo + o.lo, hi + o.hi}; }
  Interval scaled(double s) const { return s >= 0 ? Interval{s * lo, s * hi} : Interval{s * hi, s * lo}; }
};

Interval interval_mul(const Interval& a, const Interval& b);
/// Range of cos over the argument interval, exact via extrema at multiples
/// of pi inside it (endpoint evaluation alone is unsound).
Interval interval_cos(const Interval& theta);
Interval interval_sin(const Interval& theta);

/// Affine state-feedback law u = K x + b.
struct AffineLaw {
  Eigen::MatrixXd K;  // m x n
  Eigen::VectorXd b;  // m

  Eigen::VectorXd apply(const Eigen::VectorXd& x) const { return K * x + b; }
};

/// Flattened parameter layout: K entries row-major, then b entries.
AffineLaw unflatten_law(const Eigen::VectorXd& flat, int n, int m);
Eigen::VectorXd flatten_law(const AffineLaw& law);

/// Box subset of the combined controller-parameter space in R^{m(n+1)}.
struct ControllerPartition {
  int id = -1;
  Box bounds;

  int param_dim() const { return bounds.dim(); }
  AffineLaw center_law(int n, int m) const { return unflatten_law(bounds.center(), n, m); }
};

enum class ModelKind { Unicycle, IntegratorChain };

/// Discrete-time system models. Unicycle: state (x, y, theta), scalar input,
///   x+ = x + dt v cos(theta), y+ = y + dt v sin(theta), theta+ = theta + dt u.
/// Integrator chain: x+ = x + B u with B = dt * (stacked m x m identities),
/// so B = dt*I when n == m. Disturbance, when present, is an additive box.
struct SystemModel {
  ModelKind kind = ModelKind::IntegratorChain;
  int n = 0;
  int m = 0;
  double dt = 0.1;
  double speed = 1.0;  // unicycle forward speed v
  std::optional<Box> disturbance;

  static SystemModel unicycle(double v, double dt, std::optional<Box> disturbance = {});
  static SystemModel integrator_chain(int n, int m, double dt, std::optional<Box> disturbance = {});

  Eigen::MatrixXd input_matrix() const;  // B (integrator chain only)
};

/// Exact one-step map; theta is not wrapped (circularity is handled at the
/// abstraction level).
Eigen::VectorXd step(const SystemModel& model, const Eigen::VectorXd& x, const Eigen::VectorXd& u,
                     const Eigen::VectorXd& w);
Eigen::VectorXd step(const SystemModel& model, const Eigen::VectorXd& x, const Eigen::VectorXd& u);

/// Interval over-approximation of {K x + b : x in q, (K, b) in partition}.
Box control_range(const Box& q, const ControllerPartition& partition);

/// Interval over-approximation of the one-step image of q under every law in
/// the partition, Minkowski-added disturbance included, with a 1e-12 outward
/// slack on every bound.
Box interval_post(const SystemModel& model, const Box& q, const ControllerPartition& partition);

/// Deterministic grid over the partition box: k_grid points per axis
/// (endpoints included, so the vertices are on the grid) plus the center.
std::vector<Eigen::VectorXd> law_grid(const ControllerPartition& partition, int k_grid);

/// Grid-approximated Pre membership: true iff some law on the grid maps x
/// into q_target (disturbance-free step). Sound under-approximation; the
/// witness overload records the law found.
bool pre_membership(const SystemModel& model, const Eigen::VectorXd& x, const Box& q_target,
                    const ControllerPartition& partition, int k_grid);
std::optional<AffineLaw> pre_witness(const SystemModel& model, const Eigen::VectorXd& x,
                                     const Box& q_target, const ControllerPartition& partition,
                                     int k_grid);

}  // namespace cpwa

#endif  // CPWA_DYNAMICS_HPP
