#include "cpwa/lp.hpp"

#include <cmath>
#include <stdexcept>

namespace cpwa {

std::string to_string(LpStatus status) {
  switch (status) {
    case LpStatus::Optimal: return "optimal";
    case LpStatus::Infeasible: return "infeasible";
    case LpStatus::Unbounded: return "unbounded";
    case LpStatus::NumericalFailure: return "numerical_failure";
  }
  return "unknown";
}

LpProblem::LpProblem(int num_vars)
    : objective(Eigen::VectorXd::Zero(num_vars)),
      lower(Eigen::VectorXd::Constant(num_vars, -kInf)),
      upper(Eigen::VectorXd::Constant(num_vars, kInf)) {
  if (num_vars < 1) throw std::invalid_argument("LpProblem: needs at least one variable");
}

void LpProblem::add_le(const Eigen::VectorXd& a, double b) {
  if (a.size() != objective.size()) throw std::invalid_argument("LpProblem: row arity mismatch");
  rows.push_back({a, LpRow::Rel::LessEqual, b});
}

void LpProblem::add_ge(const Eigen::VectorXd& a, double b) { add_le(-a, -b); }

void LpProblem::add_eq(const Eigen::VectorXd& a, double b) {
  if (a.size() != objective.size()) throw std::invalid_argument("LpProblem: row arity mismatch");
  rows.push_back({a, LpRow::Rel::Equal, b});
}

void LpProblem::set_bounds(int var, double lo, double hi) {
  if (var < 0 || var >= num_vars()) throw std::invalid_argument("LpProblem: bad variable index");
  if (lo > hi) throw std::invalid_argument("LpProblem: lower bound above upper bound");
  lower[var] = lo;
  upper[var] = hi;
}

namespace {

// Mapping of one original variable onto nonnegative tableau columns.
struct VarMap {
  int col_pos = -1;   // column of the positive part
  int col_neg = -1;   // column of the negative part (free variables only)
  double offset = 0;  // x = sign * y + offset
  double sign = 1.0;
};

struct Tableau {
  Eigen::MatrixXd a;      // m x cols
  Eigen::VectorXd rhs;    // m, kept nonnegative
  std::vector<int> basis; // m, column basic in each row
};

// Bland's rule pivot loop on `t` for the cost row `cost` (reduced costs,
// updated in place). `allowed` masks columns eligible to enter. Returns
// Optimal/Unbounded/NumericalFailure.
LpStatus run_simplex(Tableau& t, Eigen::VectorXd& cost, double& cost_value,
                     const std::vector<bool>& allowed, std::size_t& pivots_left,
                     double tol) {
  const int m = static_cast<int>(t.a.rows());
  const int cols = static_cast<int>(t.a.cols());
  for (;;) {
    int enter = -1;
    for (int j = 0; j < cols; ++j) {
      if (allowed[j] && cost[j] < -tol) {
        enter = j;
        break;
      }
    }
    if (enter < 0) return LpStatus::Optimal;

    int leave = -1;
    double best_ratio = 0;
    for (int i = 0; i < m; ++i) {
      const double aij = t.a(i, enter);
      if (aij > tol) {
        const double ratio = t.rhs[i] / aij;
        if (leave < 0 || ratio < best_ratio - tol ||
            (std::abs(ratio - best_ratio) <= tol && t.basis[i] < t.basis[leave])) {
          leave = i;
          best_ratio = ratio;
        }
      }
    }
    if (leave < 0) return LpStatus::Unbounded;
    if (pivots_left-- == 0) return LpStatus::NumericalFailure;

    const double pivot = t.a(leave, enter);
    t.a.row(leave) /= pivot;
    t.rhs[leave] /= pivot;
    for (int i = 0; i < m; ++i) {
      if (i == leave) continue;
      const double f = t.a(i, enter);
      if (f != 0.0) {
        t.a.row(i) -= f * t.a.row(leave);
        t.rhs[i] -= f * t.rhs[leave];
        if (t.rhs[i] < 0 && t.rhs[i] > -tol) t.rhs[i] = 0;
      }
    }
    const double fc = cost[enter];
    if (fc != 0.0) {
      cost -= fc * t.a.row(leave).transpose();
      cost_value -= fc * t.rhs[leave];
    }
    t.basis[leave] = enter;
  }
}

}  // namespace

LpSolution solve_lp(const LpProblem& problem, const LpOptions& options) {
  const int n = problem.num_vars();
  for (int i = 0; i < n; ++i) {
    if (!std::isfinite(problem.objective[i]))
      throw std::invalid_argument("solve_lp: non-finite objective coefficient");
  }
  for (const auto& row : problem.rows) {
    for (int i = 0; i < n; ++i)
      if (!std::isfinite(row.a[i])) throw std::invalid_argument("solve_lp: non-finite row coefficient");
    if (!std::isfinite(row.b)) throw std::invalid_argument("solve_lp: non-finite right-hand side");
  }

  // Map variables to nonnegative columns.
  std::vector<VarMap> vmap(n);
  int cols = 0;
  for (int i = 0; i < n; ++i) {
    const double lo = problem.lower[i], hi = problem.upper[i];
    if (std::isfinite(lo)) {
      vmap[i] = {cols++, -1, lo, 1.0};
    } else if (std::isfinite(hi)) {
      vmap[i] = {cols++, -1, hi, -1.0};  // x = hi - y
    } else {
      vmap[i] = {cols, cols + 1, 0.0, 1.0};  // x = y+ - y-
      cols += 2;
    }
  }
  const int n_struct = cols;

  // Gather <= rows in transformed coordinates: row_a . y <= row_b.
  std::vector<Eigen::VectorXd> row_a;
  std::vector<double> row_b;
  auto push_le = [&](const Eigen::VectorXd& a, double b) {
    Eigen::VectorXd ta = Eigen::VectorXd::Zero(n_struct);
    double tb = b;
    for (int i = 0; i < n; ++i) {
      const double ai = a[i];
      if (ai == 0.0) continue;
      ta[vmap[i].col_pos] += ai * vmap[i].sign;
      if (vmap[i].col_neg >= 0) ta[vmap[i].col_neg] -= ai;
      tb -= ai * vmap[i].offset;
    }
    row_a.push_back(std::move(ta));
    row_b.push_back(tb);
  };
  for (const auto& row : problem.rows) {
    push_le(row.a, row.b);
    if (row.rel == LpRow::Rel::Equal) push_le(-row.a, -row.b);
  }
  // Finite upper bounds for shifted variables become explicit rows.
  for (int i = 0; i < n; ++i) {
    if (std::isfinite(problem.lower[i]) && std::isfinite(problem.upper[i])) {
      Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
      e[i] = 1.0;
      push_le(e, problem.upper[i]);
    }
  }

  const int m = static_cast<int>(row_a.size());

  // Transformed objective c~ . y + c0.
  Eigen::VectorXd c_struct = Eigen::VectorXd::Zero(n_struct);
  double c0 = 0;
  for (int i = 0; i < n; ++i) {
    const double ci = problem.objective[i];
    if (ci == 0.0) continue;
    c_struct[vmap[i].col_pos] += ci * vmap[i].sign;
    if (vmap[i].col_neg >= 0) c_struct[vmap[i].col_neg] -= ci;
    c0 += ci * vmap[i].offset;
  }

  LpSolution out;
  auto finish = [&](const Eigen::VectorXd& y) {
    out.x = Eigen::VectorXd::Zero(n);
    for (int i = 0; i < n; ++i) {
      double v = vmap[i].sign * y[vmap[i].col_pos] + vmap[i].offset;
      if (vmap[i].col_neg >= 0) v -= y[vmap[i].col_neg];
      out.x[i] = v;
    }
    out.objective_value = problem.objective.dot(out.x);
    // Validate independently of tableau state.
    for (const auto& row : problem.rows) {
      const double lhs = row.a.dot(out.x);
      const bool ok = row.rel == LpRow::Rel::Equal ? std::abs(lhs - row.b) <= options.feas_tol
                                                   : lhs <= row.b + options.feas_tol;
      if (!ok) {
        out.status = LpStatus::NumericalFailure;
        return;
      }
    }
    for (int i = 0; i < n; ++i) {
      if (out.x[i] < problem.lower[i] - options.feas_tol ||
          out.x[i] > problem.upper[i] + options.feas_tol) {
        out.status = LpStatus::NumericalFailure;
        return;
      }
    }
    out.status = LpStatus::Optimal;
  };

  if (m == 0) {
    // No constraints: optimal iff no improving direction exists.
    for (int j = 0; j < n_struct; ++j) {
      if (c_struct[j] < -options.pivot_tol) {
        out.status = LpStatus::Unbounded;
        return out;
      }
    }
    finish(Eigen::VectorXd::Zero(n_struct));
    return out;
  }

  // Standard form with slacks; rows with negative rhs get artificials.
  int n_art = 0;
  for (int i = 0; i < m; ++i)
    if (row_b[i] < 0) ++n_art;
  const int total = n_struct + m + n_art;

  Tableau t;
  t.a = Eigen::MatrixXd::Zero(m, total);
  t.rhs = Eigen::VectorXd::Zero(m);
  t.basis.assign(m, -1);

  int art = n_struct + m;
  for (int i = 0; i < m; ++i) {
    if (row_b[i] >= 0) {
      t.a.row(i).head(n_struct) = row_a[i].transpose();
      t.a(i, n_struct + i) = 1.0;  // slack
      t.rhs[i] = row_b[i];
      t.basis[i] = n_struct + i;
    } else {
      t.a.row(i).head(n_struct) = -row_a[i].transpose();
      t.a(i, n_struct + i) = -1.0;
      t.a(i, art) = 1.0;
      t.rhs[i] = -row_b[i];
      t.basis[i] = art++;
    }
  }

  std::size_t pivots_left = options.max_pivots;
  std::vector<bool> allowed(total, true);

  if (n_art > 0) {
    // Phase 1: minimize sum of artificials.
    Eigen::VectorXd cost = Eigen::VectorXd::Zero(total);
    double cost_value = 0;
    for (int i = 0; i < m; ++i) {
      if (t.basis[i] >= n_struct + m) {
        cost -= t.a.row(i).transpose();
        cost_value -= t.rhs[i];
      }
    }
    for (int j = n_struct + m; j < total; ++j) cost[j] += 1.0;

    const LpStatus st = run_simplex(t, cost, cost_value, allowed, pivots_left, options.pivot_tol);
    if (st == LpStatus::NumericalFailure) {
      out.status = st;
      return out;
    }
    // Phase-1 objective is -cost_value after reductions; recompute directly.
    double art_sum = 0;
    for (int i = 0; i < m; ++i)
      if (t.basis[i] >= n_struct + m) art_sum += t.rhs[i];
    if (art_sum > 1e-7) {
      out.status = LpStatus::Infeasible;
      return out;
    }
    // Drive residual basic artificials out of the basis.
    for (int i = 0; i < m; ++i) {
      if (t.basis[i] < n_struct + m) continue;
      int enter = -1;
      for (int j = 0; j < n_struct + m; ++j) {
        if (std::abs(t.a(i, j)) > options.pivot_tol) {
          enter = j;
          break;
        }
      }
      if (enter < 0) {
        // Redundant row; keep the artificial pinned at zero.
        continue;
      }
      const double pivot = t.a(i, enter);
      t.a.row(i) /= pivot;
      t.rhs[i] /= pivot;
      for (int r = 0; r < m; ++r) {
        if (r == i) continue;
        const double f = t.a(r, enter);
        if (f != 0.0) {
          t.a.row(r) -= f * t.a.row(i);
          t.rhs[r] -= f * t.rhs[i];
          if (t.rhs[r] < 0 && t.rhs[r] > -options.pivot_tol) t.rhs[r] = 0;
        }
      }
      t.basis[i] = enter;
    }
    for (int j = n_struct + m; j < total; ++j) allowed[j] = false;
  }

  // Phase 2 over the original objective.
  Eigen::VectorXd cost = Eigen::VectorXd::Zero(total);
  cost.head(n_struct) = c_struct;
  double cost_value = 0;
  for (int i = 0; i < m; ++i) {
    const int b = t.basis[i];
    const double cb = b < n_struct ? c_struct[b] : 0.0;
    if (cb != 0.0) {
      cost -= cb * t.a.row(i).transpose();
      cost_value -= cb * t.rhs[i];
    }
  }

  const LpStatus st = run_simplex(t, cost, cost_value, allowed, pivots_left, options.pivot_tol);
  if (st != LpStatus::Optimal) {
    out.status = st;
    return out;
  }

  Eigen::VectorXd y = Eigen::VectorXd::Zero(total);
  for (int i = 0; i < m; ++i) y[t.basis[i]] = t.rhs[i];
  finish(y.head(n_struct));
  (void)c0;
  return out;
}

}  // namespace cpwa
