#ifndef CPWA_GEOMETRY_HPP
#define CPWA_GEOMETRY_HPP

#include <optional>
#include <stdexcept>
#include <vector>

#include <Eigen/Dense>

namespace cpwa {

/// Axis-aligned box [lo, hi] with closed-set semantics: boundaries belong to
/// the box and face-touching counts as intersection. Degenerate zero-width
/// dimensions are allowed.
struct Box {
  Eigen::VectorXd lo;
  Eigen::VectorXd hi;

  Box() = default;
  Box(Eigen::VectorXd lo_, Eigen::VectorXd hi_);

  int dim() const { return static_cast<int>(lo.size()); }
  double width(int axis) const { return hi[axis] - lo[axis]; }
  Eigen::VectorXd center() const { return 0.5 * (lo + hi); }
  bool contains(const Eigen::VectorXd& x, double tol = 0.0) const;
  bool contains(const Box& other, double tol = 0.0) const;
  Box inflated(double eps) const;
  std::vector<Eigen::VectorXd> corners() const;  // all 2^dim corner points
};

bool box_intersects(const Box& a, const Box& b);
std::optional<Box> box_intersection(const Box& a, const Box& b);
double measure(const Box& b);

struct UnboundedPolytope : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Halfspace-represented polytope {x : A x <= c}. Emptiness is a queryable
/// state, not an error.
struct HPolytope {
  Eigen::MatrixXd A;
  Eigen::VectorXd c;

  HPolytope() = default;
  HPolytope(Eigen::MatrixXd A_, Eigen::VectorXd c_);

  int dim() const { return static_cast<int>(A.cols()); }
  int num_rows() const { return static_cast<int>(A.rows()); }
  static HPolytope from_box(const Box& b);
  HPolytope with_row(const Eigen::VectorXd& a, double bound) const;
  bool contains(const Eigen::VectorXd& x, double tol = 1e-9) const;
  bool empty(double tol = 1e-9) const;
};

/// Exact vertex enumeration by n-row subsets. Dimension is capped at 6;
/// unbounded polytopes (nontrivial recession cone) raise UnboundedPolytope
/// rather than returning a partial answer. Vertices are deduplicated at
/// 1e-9 in the infinity norm.
std::vector<Eigen::VectorXd> vertices(const HPolytope& p);

/// Tight axis-aligned bounding box via per-axis LPs.
Box bounding_box(const HPolytope& p);

/// Wraps coordinates on the listed circular axes into [bounds.lo, bounds.hi)
/// by their period; other axes pass through.
Eigen::VectorXd wrap_point(const Eigen::VectorXd& x, const Box& bounds,
                           const std::vector<int>& circular_axes);

/// Splits a box whose circular-axis extent may stick out of bounds into
/// in-range pieces (at most two per circular axis; the full axis range when
/// the extent spans a whole period).
std::vector<Box> wrap_box(const Box& b, const Box& bounds, const std::vector<int>& circular_axes);

/// Closed-cover test: is `a` contained in the union of `covers`? Decided by
/// recursive box subtraction with covers inflated by `tol`, so seams between
/// touching covers and floating-point noise up to tol do not break coverage.
bool box_covered(const Box& a, const std::vector<Box>& covers, double tol = 1e-9);

}  // namespace cpwa

#endif  // CPWA_GEOMETRY_HPP
