#ifndef CPWA_LP_HPP
#define CPWA_LP_HPP

#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace cpwa {

enum class LpStatus { Optimal, Infeasible, Unbounded, NumericalFailure };

std::string to_string(LpStatus status);

/// One linear constraint a.x <= b or a.x == b.
struct LpRow {
  enum class Rel { LessEqual, Equal };
  Eigen::VectorXd a;
  Rel rel = Rel::LessEqual;
  double b = 0.0;
};

/// Dense LP: minimize objective.x subject to rows and per-variable bounds
/// (+-infinity allowed).
struct LpProblem {
  Eigen::VectorXd objective;
  std::vector<LpRow> rows;
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  explicit LpProblem(int num_vars);

  int num_vars() const { return static_cast<int>(objective.size()); }
  void add_le(const Eigen::VectorXd& a, double b);
  void add_ge(const Eigen::VectorXd& a, double b);  // stored as -a.x <= -b
  void add_eq(const Eigen::VectorXd& a, double b);
  void set_bounds(int var, double lo, double hi);
};

struct LpSolution {
  LpStatus status = LpStatus::NumericalFailure;
  Eigen::VectorXd x;
  double objective_value = 0.0;
};

struct LpOptions {
  std::size_t max_pivots = 1000000;
  double pivot_tol = 1e-9;
  double feas_tol = 1e-8;
};

/// Primal simplex (two phases, Bland's rule) on the standard-form tableau.
/// Deterministic for a fixed problem. Equality rows are handled as two
/// inequalities. Exceeding max_pivots or failing the final feasibility
/// validation yields NumericalFailure, never a silent Infeasible.
LpSolution solve_lp(const LpProblem& problem, const LpOptions& options = {});

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace cpwa

#endif  // CPWA_LP_HPP
