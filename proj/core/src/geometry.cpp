#include "cpwa/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <deque>

#include "cpwa/lp.hpp"

namespace cpwa {

Box::Box(Eigen::VectorXd lo_, Eigen::VectorXd hi_) : lo(std::move(lo_)), hi(std::move(hi_)) {
  if (lo.size() != hi.size()) throw std::invalid_argument("Box: lo/hi dimension mismatch");
  for (int i = 0; i < lo.size(); ++i)
    if (lo[i] > hi[i]) throw std::invalid_argument("Box: lo above hi on axis " + std::to_string(i));
}

bool Box::contains(const Eigen::VectorXd& x, double tol) const {
  if (x.size() != lo.size()) throw std::invalid_argument("Box::contains: dimension mismatch");
  for (int i = 0; i < lo.size(); ++i)
    if (x[i] < lo[i] - tol || x[i] > hi[i] + tol) return false;
  return true;
}

bool Box::contains(const Box& other, double tol) const {
  if (other.dim() != dim()) throw std::invalid_argument("Box::contains: dimension mismatch");
  for (int i = 0; i < lo.size(); ++i)
    if (other.lo[i] < lo[i] - tol || other.hi[i] > hi[i] + tol) return false;
  return true;
}

Box Box::inflated(double eps) const {
  Box b = *this;
  b.lo.array() -= eps;
  b.hi.array() += eps;
  return b;
}

std::vector<Eigen::VectorXd> Box::corners() const {
  const int n = dim();
  std::vector<Eigen::VectorXd> out;
  out.reserve(std::size_t{1} << n);
  for (std::size_t mask = 0; mask < (std::size_t{1} << n); ++mask) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v[i] = (mask >> i) & 1 ? hi[i] : lo[i];
    out.push_back(std::move(v));
  }
  return out;
}

bool box_intersects(const Box& a, const Box& b) {
  if (a.dim() != b.dim()) throw std::invalid_argument("box_intersects: dimension mismatch");
  for (int i = 0; i < a.dim(); ++i)
    if (std::max(a.lo[i], b.lo[i]) > std::min(a.hi[i], b.hi[i])) return false;
  return true;
}

std::optional<Box> box_intersection(const Box& a, const Box& b) {
  if (!box_intersects(a, b)) return std::nullopt;
  return Box(a.lo.cwiseMax(b.lo), a.hi.cwiseMin(b.hi));
}

double measure(const Box& b) {
  double m = 1.0;
  for (int i = 0; i < b.dim(); ++i) m *= b.width(i);
  return m;
}

HPolytope::HPolytope(Eigen::MatrixXd A_, Eigen::VectorXd c_) : A(std::move(A_)), c(std::move(c_)) {
  if (A.rows() != c.size()) throw std::invalid_argument("HPolytope: A/c row mismatch");
}

HPolytope HPolytope::from_box(const Box& b) {
  const int n = b.dim();
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(2 * n, n);
  Eigen::VectorXd c(2 * n);
  for (int i = 0; i < n; ++i) {
    A(2 * i, i) = 1.0;
    c[2 * i] = b.hi[i];
    A(2 * i + 1, i) = -1.0;
    c[2 * i + 1] = -b.lo[i];
  }
  return HPolytope(std::move(A), std::move(c));
}

HPolytope HPolytope::with_row(const Eigen::VectorXd& a, double bound) const {
  if (a.size() != dim()) throw std::invalid_argument("HPolytope::with_row: dimension mismatch");
  HPolytope out;
  out.A.resize(A.rows() + 1, A.cols());
  out.A << A, a.transpose();
  out.c.resize(c.size() + 1);
  out.c << c, bound;
  return out;
}

bool HPolytope::contains(const Eigen::VectorXd& x, double tol) const {
  if (x.size() != dim()) throw std::invalid_argument("HPolytope::contains: dimension mismatch");
  return ((A * x - c).array() <= tol).all();
}

bool HPolytope::empty(double tol) const {
  LpProblem p(dim());
  for (int i = 0; i < num_rows(); ++i) p.add_le(A.row(i).transpose(), c[i] + tol);
  const LpSolution s = solve_lp(p);
  if (s.status == LpStatus::NumericalFailure)
    throw std::runtime_error("HPolytope::empty: LP numerical failure");
  return s.status == LpStatus::Infeasible;
}

namespace {

// True if the recession cone {d : A d <= 0} contains a nonzero direction.
bool has_recession_direction(const HPolytope& p) {
  const int n = p.dim();
  for (int axis = 0; axis < n; ++axis) {
    for (double dir : {1.0, -1.0}) {
      LpProblem lp(n);
      Eigen::VectorXd obj = Eigen::VectorXd::Zero(n);
      obj[axis] = -dir;  // maximize dir * d_axis
      lp.objective = obj;
      for (int i = 0; i < p.num_rows(); ++i) lp.add_le(p.A.row(i).transpose(), 0.0);
      for (int i = 0; i < n; ++i) lp.set_bounds(i, -1.0, 1.0);
      const LpSolution s = solve_lp(lp);
      if (s.status != LpStatus::Optimal)
        throw std::runtime_error("recession check: unexpected LP status " + to_string(s.status));
      if (-s.objective_value > 1e-7) return true;
    }
  }
  return false;
}

}  // namespace

std::vector<Eigen::VectorXd> vertices(const HPolytope& p) {
  const int n = p.dim();
  const int k = p.num_rows();
  if (n > 6) throw std::invalid_argument("vertices: dimension above enumeration cap (6)");
  std::vector<Eigen::VectorXd> out;
  if (k < n) {
    if (!p.empty()) throw UnboundedPolytope("vertices: fewer rows than dimensions");
    return out;
  }
  if (p.empty()) return out;
  if (has_recession_direction(p))
    throw UnboundedPolytope("vertices: polytope has a recession direction");

  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) idx[i] = i;
  const double sat_tol = 1e-9;
  const double dedup_tol = 1e-9;

  // Iterate all n-row subsets in lexicographic order.
  for (;;) {
    Eigen::MatrixXd M(n, n);
    Eigen::VectorXd rhs(n);
    for (int i = 0; i < n; ++i) {
      M.row(i) = p.A.row(idx[i]);
      rhs[i] = p.c[idx[i]];
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
    if (lu.isInvertible()) {
      Eigen::VectorXd v = lu.solve(rhs);
      if (((p.A * v - p.c).array() <= sat_tol).all()) {
        bool dup = false;
        for (const auto& w : out) {
          if ((w - v).lpNorm<Eigen::Infinity>() < dedup_tol) {
            dup = true;
            break;
          }
        }
        if (!dup) out.push_back(std::move(v));
      }
    }
    // next combination
    int pos = n - 1;
    while (pos >= 0 && idx[pos] == k - n + pos) --pos;
    if (pos < 0) break;
    ++idx[pos];
    for (int i = pos + 1; i < n; ++i) idx[i] = idx[i - 1] + 1;
  }
  return out;
}

Box bounding_box(const HPolytope& p) {
  const int n = p.dim();
  Eigen::VectorXd lo(n), hi(n);
  for (int axis = 0; axis < n; ++axis) {
    for (double dir : {1.0, -1.0}) {
      LpProblem lp(n);
      Eigen::VectorXd obj = Eigen::VectorXd::Zero(n);
      obj[axis] = dir;
      lp.objective = obj;
      for (int i = 0; i < p.num_rows(); ++i) lp.add_le(p.A.row(i).transpose(), p.c[i]);
      const LpSolution s = solve_lp(lp);
      if (s.status == LpStatus::Unbounded) throw UnboundedPolytope("bounding_box: unbounded polytope");
      if (s.status != LpStatus::Optimal)
        throw std::runtime_error("bounding_box: LP status " + to_string(s.status));
      if (dir > 0)
        lo[axis] = s.objective_value;
      else
        hi[axis] = -s.objective_value;
    }
    if (lo[axis] > hi[axis]) {
      // Solver noise on a degenerate axis; collapse to the midpoint.
      const double mid = 0.5 * (lo[axis] + hi[axis]);
      lo[axis] = hi[axis] = mid;
    }
  }
  return Box(std::move(lo), std::move(hi));
}

Eigen::VectorXd wrap_point(const Eigen::VectorXd& x, const Box& bounds,
                           const std::vector<int>& circular_axes) {
  Eigen::VectorXd y = x;
  for (int axis : circular_axes) {
    const double period = bounds.width(axis);
    if (period <= 0) continue;
    double v = std::fmod(y[axis] - bounds.lo[axis], period);
    if (v < 0) v += period;
    y[axis] = bounds.lo[axis] + v;
  }
  return y;
}

std::vector<Box> wrap_box(const Box& b, const Box& bounds, const std::vector<int>& circular_axes) {
  std::vector<Box> pieces{b};
  for (int axis : circular_axes) {
    const double period = bounds.width(axis);
    if (period <= 0) continue;
    std::vector<Box> next;
    for (const Box& piece : pieces) {
      if (piece.width(axis) >= period) {
        Box whole = piece;
        whole.lo[axis] = bounds.lo[axis];
        whole.hi[axis] = bounds.hi[axis];
        next.push_back(std::move(whole));
        continue;
      }
      double shift = std::floor((piece.lo[axis] - bounds.lo[axis]) / period) * period;
      double lo = piece.lo[axis] - shift;
      double hi = piece.hi[axis] - shift;
      // Guard fmod-style rounding at the seam.
      if (lo < bounds.lo[axis]) {
        lo += period;
        hi += period;
      }
      if (hi <= bounds.hi[axis]) {
        Box one = piece;
        one.lo[axis] = lo;
        one.hi[axis] = std::min(hi, bounds.hi[axis]);
        next.push_back(std::move(one));
      } else {
        Box first = piece;
        first.lo[axis] = lo;
        first.hi[axis] = bounds.hi[axis];
        next.push_back(std::move(first));
        Box second = piece;
        second.lo[axis] = bounds.lo[axis];
        second.hi[axis] = std::min(hi - period, bounds.hi[axis]);
        next.push_back(std::move(second));
      }
    }
    pieces = std::move(next);
  }
  return pieces;
}

bool box_covered(const Box& a, const std::vector<Box>& covers, double tol) {
  std::deque<Box> remainder{a};
  for (const Box& cover_raw : covers) {
    if (remainder.empty()) return true;
    const Box cover = cover_raw.inflated(tol);
    std::deque<Box> next;
    while (!remainder.empty()) {
      Box piece = remainder.front();
      remainder.pop_front();
      if (!box_intersects(piece, cover)) {
        next.push_back(std::move(piece));
        continue;
      }
      // Peel off the slabs of `piece` outside `cover`, axis by axis; what is
      // left (the overlap core) is covered and discarded. Zero-width slabs
      // lie on the inflated cover boundary and are covered as well.
      for (int axis = 0; axis < piece.dim(); ++axis) {
        const double clo = std::max(piece.lo[axis], cover.lo[axis]);
        const double chi = std::min(piece.hi[axis], cover.hi[axis]);
        if (piece.lo[axis] < clo) {
          Box slab = piece;
          slab.hi[axis] = clo;
          if (slab.width(axis) > 0) next.push_back(std::move(slab));
          piece.lo[axis] = clo;
        }
        if (piece.hi[axis] > chi) {
          Box slab = piece;
          slab.lo[axis] = chi;
          if (slab.width(axis) > 0) next.push_back(std::move(slab));
          piece.hi[axis] = chi;
        }
      }
    }
    remainder = std::move(next);
  }
  return remainder.empty();
}

}  // namespace cpwa
