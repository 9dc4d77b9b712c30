// Independent oracles for the test suites. Everything here recomputes
// expected results from first principles and must stay independent of the
// library code paths it checks (brute force, pairwise enumeration, finite
// differences, unrolled recursions).

#ifndef CPWA_TESTS_ORACLES_HPP
#define CPWA_TESTS_ORACLES_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <optional>
#include <set>
#include <vector>

#include <Eigen/Dense>

#include "cpwa/liveness.hpp"
#include "cpwa/lp.hpp"
#include "cpwa/neural.hpp"

namespace oracle {

// ---------------------------------------------------------------------------
// Vertex enumeration of {A x <= c} by brute-force row-pair (2D) or row-subset
// intersection with a direct feasibility filter. No LP involved.
// ---------------------------------------------------------------------------

inline std::vector<Eigen::VectorXd> polytope_vertices(const Eigen::MatrixXd& A,
                                                      const Eigen::VectorXd& c,
                                                      double tol = 1e-9) {
  const int n = static_cast<int>(A.cols());
  const int k = static_cast<int>(A.rows());
  std::vector<Eigen::VectorXd> out;
  std::vector<int> idx(n);
  std::function<void(int, int)> rec = [&](int pos, int start) {
    if (pos == n) {
      Eigen::MatrixXd M(n, n);
      Eigen::VectorXd rhs(n);
      for (int i = 0; i < n; ++i) {
        M.row(i) = A.row(idx[i]);
        rhs[i] = c[idx[i]];
      }
      Eigen::FullPivLU<Eigen::MatrixXd> lu(M);
      if (!lu.isInvertible()) return;
      Eigen::VectorXd v = lu.solve(rhs);
      if (((A * v - c).array() > tol).any()) return;
      for (const auto& w : out)
        if ((w - v).lpNorm<Eigen::Infinity>() < tol) return;
      out.push_back(std::move(v));
      return;
    }
    for (int i = start; i <= k - (n - pos); ++i) {
      idx[pos] = i;
      rec(pos + 1, i + 1);
    }
  };
  if (k >= n) rec(0, 0);
  return out;
}

// ---------------------------------------------------------------------------
// LP oracle for problems whose variables all carry finite box bounds: the
// feasible set is a polytope, so the optimum (when the set is nonempty) is
// attained at a vertex of {rows + bound rows}.
// ---------------------------------------------------------------------------

struct LpOracleResult {
  bool feasible = false;
  double objective = 0.0;
  Eigen::VectorXd x;
};

inline LpOracleResult lp_vertex_oracle(const cpwa::LpProblem& problem, double tol = 1e-7) {
  const int n = problem.num_vars();
  std::vector<Eigen::VectorXd> rows_a;
  std::vector<double> rows_c;
  for (const auto& row : problem.rows) {
    rows_a.push_back(row.a);
    rows_c.push_back(row.b);
    if (row.rel == cpwa::LpRow::Rel::Equal) {
      rows_a.push_back(-row.a);
      rows_c.push_back(-row.b);
    }
  }
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
    e[i] = 1.0;
    rows_a.push_back(e);
    rows_c.push_back(problem.upper[i]);
    rows_a.push_back(-e);
    rows_c.push_back(-problem.lower[i]);
  }
  Eigen::MatrixXd A(rows_a.size(), n);
  Eigen::VectorXd c(rows_c.size());
  for (std::size_t i = 0; i < rows_a.size(); ++i) {
    A.row(i) = rows_a[i].transpose();
    c[i] = rows_c[i];
  }
  LpOracleResult out;
  for (const Eigen::VectorXd& v : polytope_vertices(A, c, tol)) {
    const double obj = problem.objective.dot(v);
    if (!out.feasible || obj < out.objective) {
      out.feasible = true;
      out.objective = obj;
      out.x = v;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Unsafe-set recursion unrolled |X| times, straight from the definition.
// ---------------------------------------------------------------------------

struct FixpointOracle {
  std::set<int> unsafe;
  int iterations = 0;
};

inline FixpointOracle brute_force_unsafe(const cpwa::PosteriorGraph& graph) {
  FixpointOracle out;
  for (int q = 0; q < graph.num_states(); ++q)
    if (graph.states[q].kind == cpwa::StateKind::Obstacle) out.unsafe.insert(q);
  const int num_states = graph.num_states();
  for (int k = 1; k <= num_states + 1; ++k) {
    std::set<int> next = out.unsafe;
    for (int q = 0; q < num_states; ++q) {
      if (next.count(q) || graph.states[q].kind != cpwa::StateKind::Normal) continue;
      bool all_hit = true;
      for (int p = 0; p < graph.num_partitions(); ++p) {
        bool hit = false;
        for (int succ : graph.edges[q][p])
          if (out.unsafe.count(succ)) {
            hit = true;
            break;
          }
        if (!hit) {
          all_hit = false;
          break;
        }
      }
      if (all_hit) next.insert(q);
    }
    const bool stable = next == out.unsafe;
    out.unsafe = std::move(next);
    out.iterations = k;
    if (stable) break;
  }
  return out;
}

// P_safe per the definition, written independently of compute_unsafe_fixpoint.
inline std::vector<std::vector<int>> brute_force_p_safe(const cpwa::PosteriorGraph& graph,
                                                        const std::set<int>& unsafe) {
  std::vector<std::vector<int>> out(graph.num_states());
  for (int q = 0; q < graph.num_states(); ++q) {
    if (unsafe.count(q)) continue;
    for (int p = 0; p < graph.num_partitions(); ++p) {
      if (graph.states[q].kind == cpwa::StateKind::Normal && graph.edges[q][p].empty()) continue;
      bool ok = true;
      for (int succ : graph.edges[q][p])
        if (unsafe.count(succ)) {
          ok = false;
          break;
        }
      if (ok) out[q].push_back(p);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// All-pairs shortest paths over the predecessor edges (Floyd-Warshall).
// ---------------------------------------------------------------------------

inline std::vector<int> floyd_warshall_dist_to(const cpwa::PredecessorGraph& graph, int target) {
  const int n = graph.num_states;
  const int inf = cpwa::kUnreachable;
  std::vector<std::vector<int>> d(n, std::vector<int>(n, inf));
  for (int i = 0; i < n; ++i) d[i][i] = 0;
  for (int q = 0; q < n; ++q)
    for (const auto& per_partition : graph.edges[q])
      for (const auto& e : per_partition) d[q][e.target] = 1;
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (d[i][k] != inf && d[k][j] != inf && d[i][k] + d[k][j] < d[i][j])
          d[i][j] = d[i][k] + d[k][j];
  std::vector<int> out(n);
  for (int i = 0; i < n; ++i) out[i] = d[i][target];
  return out;
}

// ---------------------------------------------------------------------------
// Progress set via explicit enumeration of strictly-distance-decreasing
// trajectories reaching the goal within the horizon.
// ---------------------------------------------------------------------------

inline std::vector<int> enumerate_progress(const cpwa::PredecessorGraph& graph,
                                           const std::vector<int>& dist, int q, int p, int goal,
                                           int horizon) {
  std::vector<int> out;
  if (dist[q] == cpwa::kUnreachable || dist[q] > horizon) return out;
  // First hop must use partition p; later hops may use any partition. Every
  // hop must strictly decrease the distance, and the goal must be reached
  // within the horizon.
  std::function<bool(int, int)> reaches = [&](int from, int steps_left) -> bool {
    if (from == goal) return true;
    if (steps_left == 0) return false;
    for (const auto& per_partition : graph.edges[from])
      for (const auto& e : per_partition)
        if (dist[e.target] != cpwa::kUnreachable && dist[e.target] < dist[from] &&
            reaches(e.target, steps_left - 1))
          return true;
    return false;
  };
  std::set<int> firsts;
  for (const auto& e : graph.edges[q][p])
    if (dist[e.target] != cpwa::kUnreachable && dist[e.target] < dist[q]) firsts.insert(e.target);
  for (int first : firsts)
    if (reaches(first, horizon - 1)) out.push_back(first);
  return out;
}

// ---------------------------------------------------------------------------
// Network loss gradient by central finite differences.
// ---------------------------------------------------------------------------

inline double net_mse(const cpwa::ReluNet& net, const std::vector<cpwa::ExpertSample>& data) {
  double loss = 0.0;
  for (const auto& s : data) loss += (net.forward(s.x) - s.u).squaredNorm();
  return loss / static_cast<double>(data.size());
}

struct NetGrads {
  Eigen::MatrixXd W1, W2;
  Eigen::VectorXd b1, b2;
};

inline NetGrads finite_difference_grads(const cpwa::ReluNet& net,
                                        const std::vector<cpwa::ExpertSample>& data,
                                        double h = 1e-5) {
  NetGrads g;
  auto central = [&](cpwa::ReluNet& probe, double* slot) {
    const double saved = *slot;
    *slot = saved + h;
    const double plus = net_mse(probe, data);
    *slot = saved - h;
    const double minus = net_mse(probe, data);
    *slot = saved;
    return (plus - minus) / (2.0 * h);
  };
  auto grad_matrix = [&](const Eigen::MatrixXd& which, int tag) {
    Eigen::MatrixXd out(which.rows(), which.cols());
    for (Eigen::Index r = 0; r < which.rows(); ++r) {
      for (Eigen::Index c = 0; c < which.cols(); ++c) {
        cpwa::ReluNet probe = net;
        Eigen::MatrixXd& target = tag == 1 ? probe.W1 : probe.W2;
        out(r, c) = central(probe, &target(r, c));
      }
    }
    return out;
  };
  auto grad_vector = [&](const Eigen::VectorXd& which, int tag) {
    Eigen::VectorXd out(which.size());
    for (Eigen::Index i = 0; i < which.size(); ++i) {
      cpwa::ReluNet probe = net;
      Eigen::VectorXd& target = tag == 1 ? probe.b1 : probe.b2;
      out[i] = central(probe, &target[i]);
    }
    return out;
  };
  g.W1 = grad_matrix(net.W1, 1);
  g.W2 = grad_matrix(net.W2, 2);
  g.b1 = grad_vector(net.b1, 1);
  g.b2 = grad_vector(net.b2, 2);
  return g;
}

// Analytic full-batch MSE gradients recomputed here (mirrors the training
// update rule; used to compare against finite differences).
inline NetGrads analytic_grads(const cpwa::ReluNet& net,
                               const std::vector<cpwa::ExpertSample>& data) {
  const int batch = static_cast<int>(data.size());
  NetGrads g;
  g.W1 = Eigen::MatrixXd::Zero(net.W1.rows(), net.W1.cols());
  g.b1 = Eigen::VectorXd::Zero(net.b1.size());
  g.W2 = Eigen::MatrixXd::Zero(net.W2.rows(), net.W2.cols());
  g.b2 = Eigen::VectorXd::Zero(net.b2.size());
  for (const auto& s : data) {
    const Eigen::VectorXd z = net.W1 * s.x + net.b1;
    const Eigen::VectorXd hdd = z.cwiseMax(0.0);
    const Eigen::VectorXd err = net.W2 * hdd + net.b2 - s.u;
    const Eigen::VectorXd dout = 2.0 * err / batch;
    g.W2 += dout * hdd.transpose();
    g.b2 += dout;
    Eigen::VectorXd dh = net.W2.transpose() * dout;
    for (Eigen::Index j = 0; j < dh.size(); ++j)
      if (z[j] <= 0.0) dh[j] = 0.0;
    g.W1 += dh * s.x.transpose();
    g.b1 += dh;
  }
  return g;
}

// ---------------------------------------------------------------------------
// Literal step-gated summation of the composed controller: the gate of each
// module is evaluated as a product of Step(-A x + c) neurons over the H-rep
// of its box, and the module outputs are summed.
// ---------------------------------------------------------------------------

inline Eigen::VectorXd literal_gated_sum(const cpwa::GlobalController& controller,
                                         const Eigen::VectorXd& x_raw, int m) {
  const Eigen::VectorXd x = cpwa::wrap_point(x_raw, controller.bounds, controller.circular_axes);
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(m);
  for (const auto& module : controller.modules) {
    const cpwa::HPolytope gate = cpwa::HPolytope::from_box(module.gate);
    double product = 1.0;
    for (int i = 0; i < gate.num_rows(); ++i) {
      const double z = -gate.A.row(i).dot(x) + gate.c[i];
      product *= z >= 0.0 ? 1.0 : 0.0;
    }
    if (product > 0.0) sum += module.net.forward(x);
  }
  return sum;
}

// Number of modules whose gate activates at x (diagnoses boundary
// double-activation).
inline int literal_active_gates(const cpwa::GlobalController& controller,
                                const Eigen::VectorXd& x_raw) {
  const Eigen::VectorXd x = cpwa::wrap_point(x_raw, controller.bounds, controller.circular_axes);
  int active = 0;
  for (const auto& module : controller.modules)
    if (module.gate.contains(x)) ++active;
  return active;
}

}  // namespace oracle

#endif  // CPWA_TESTS_ORACLES_HPP
