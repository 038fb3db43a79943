#pragma once

// Empirical Wasserstein distances between equal-weight path samples under the
// sup metric: exact assignment, min-cost flow for unequal sizes, exhaustive
// enumeration (oracle), and log-domain entropic scaling.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "flightwp/parallel.hpp"
#include "flightwp/path_space.hpp"

namespace flightwp {

/// Dense rows x cols matrix of d(x_i, y_j)^p.
struct CostMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  double p = 1.0;
  std::vector<double> entries;

  CostMatrix() = default;
  CostMatrix(std::size_t r, std::size_t c, double order, std::vector<double> values)
      : rows(r), cols(c), p(order), entries(std::move(values)) {
    if (entries.size() != rows * cols) throw std::invalid_argument("cost matrix: wrong entry count");
    if (!(p >= 1.0)) throw std::invalid_argument("cost matrix: p must be >= 1");
    for (double c_ij : entries)
      if (!std::isfinite(c_ij) || c_ij < 0.0)
        throw std::invalid_argument("cost matrix entries must be finite and nonnegative");
  }

  double operator()(std::size_t i, std::size_t j) const { return entries[i * cols + j]; }
  double max() const { return entries.empty() ? 0.0 : *std::max_element(entries.begin(), entries.end()); }
  bool empty() const noexcept { return rows == 0 || cols == 0; }
};

/// Coupling with uniform marginals 1/rows and 1/cols.
struct TransportPlan {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> mass;

  double operator()(std::size_t i, std::size_t j) const { return mass[i * cols + j]; }

  std::vector<double> row_sums() const {
    std::vector<double> out(rows, 0.0);
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < cols; ++j) out[i] += mass[i * cols + j];
    return out;
  }
  std::vector<double> col_sums() const {
    std::vector<double> out(cols, 0.0);
    for (std::size_t i = 0; i < rows; ++i)
      for (std::size_t j = 0; j < cols; ++j) out[j] += mass[i * cols + j];
    return out;
  }

  /// Largest deviation of any row or column sum from its uniform target.
  double marginal_violation() const {
    double worst = 0.0;
    for (double r : row_sums()) worst = std::max(worst, std::abs(r - 1.0 / static_cast<double>(rows)));
    for (double c : col_sums()) worst = std::max(worst, std::abs(c - 1.0 / static_cast<double>(cols)));
    return worst;
  }
};

struct WassersteinEstimate {
  double value = 0.0;           // (Σ π c)^{1/p}
  double transport_cost = 0.0;  // Σ π c
  double p = 1.0;
  std::string solver;
  TransportPlan plan;
};

/// Entropic solver failed to reach the requested marginal tolerance.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, double violation, std::size_t iterations)
      : std::runtime_error(what), violation_(violation), iterations_(iterations) {}
  double violation() const noexcept { return violation_; }
  std::size_t iterations() const noexcept { return iterations_; }

 private:
  double violation_;
  std::size_t iterations_;
};

inline CostMatrix cost_matrix(const PathSample& a, const PathSample& b, double p,
                              unsigned threads = 1) {
  a.validate();
  b.validate();
  if (a.dimension() != b.dimension()) throw std::invalid_argument("cost_matrix: dimension mismatch");
  if (!(p >= 1.0)) throw std::invalid_argument("cost_matrix: p must be >= 1");
  std::vector<double> entries(a.size() * b.size());
  parallel_for(a.size(), threads, [&](std::size_t i) {
    for (std::size_t j = 0; j < b.size(); ++j)
      entries[i * b.size() + j] = std::pow(sup_distance(a.paths[i], b.paths[j]), p);
  });
  return CostMatrix(a.size(), b.size(), p, std::move(entries));
}

/// Σ π_ij c_ij, summed in ascending order of the terms so the result does not
/// depend on how rows and columns are labelled (W(A,B) == W(B,A) exactly).
inline double plan_cost(const TransportPlan& plan, const CostMatrix& cost) {
  std::vector<double> terms;
  for (std::size_t i = 0; i < plan.rows; ++i)
    for (std::size_t j = 0; j < plan.cols; ++j) {
      const double m = plan(i, j);
      if (m != 0.0) terms.push_back(m * cost(i, j));
    }
  std::sort(terms.begin(), terms.end());
  double total = 0.0;
  for (double t : terms) total += t;
  return total;
}

inline WassersteinEstimate make_estimate(TransportPlan plan, const CostMatrix& cost,
                                         std::string solver) {
  WassersteinEstimate est;
  est.transport_cost = plan_cost(plan, cost);
  est.value = std::pow(std::max(est.transport_cost, 0.0), 1.0 / cost.p);
  est.p = cost.p;
  est.solver = std::move(solver);
  est.plan = std::move(plan);
  return est;
}

/// Plan of a permutation: mass 1/m at (i, assignment[i]).
inline TransportPlan permutation_plan(const std::vector<std::size_t>& assignment) {
  const std::size_t m = assignment.size();
  TransportPlan plan{m, m, std::vector<double>(m * m, 0.0)};
  for (std::size_t i = 0; i < m; ++i) plan.mass[i * m + assignment[i]] = 1.0 / static_cast<double>(m);
  return plan;
}

/// Minimum-cost perfect matching by shortest augmenting paths with row/column
/// potentials (Hungarian method, O(m^3)). Returns the column of each row.
inline std::vector<std::size_t> solve_assignment(const CostMatrix& cost) {
  if (cost.rows != cost.cols) throw std::invalid_argument("assignment needs a square cost matrix");
  const std::size_t m = cost.rows;
  constexpr double inf = std::numeric_limits<double>::infinity();
  // 1-based with a virtual column 0.
  std::vector<double> u(m + 1, 0.0);
  std::vector<double> v(m + 1, 0.0);
  std::vector<std::size_t> owner(m + 1, 0);  // owner[j]: row matched to column j
  std::vector<std::size_t> way(m + 1, 0);
  std::vector<double> minv(m + 1);
  std::vector<char> used(m + 1);
  for (std::size_t row = 1; row <= m; ++row) {
    owner[0] = row;
    std::size_t col0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[col0] = 1;
      const std::size_t i0 = owner[col0];
      double delta = inf;
      std::size_t col1 = 0;
      for (std::size_t j = 1; j <= m; ++j) {
        if (used[j]) continue;
        const double reduced = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (reduced < minv[j]) {
          minv[j] = reduced;
          way[j] = col0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          col1 = j;
        }
      }
      for (std::size_t j = 0; j <= m; ++j) {
        if (used[j]) {
          u[owner[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      col0 = col1;
    } while (owner[col0] != 0);
    do {
      const std::size_t col1 = way[col0];
      owner[col0] = owner[col1];
      col0 = col1;
    } while (col0 != 0);
  }
  std::vector<std::size_t> assignment(m);
  for (std::size_t j = 1; j <= m; ++j) assignment[owner[j] - 1] = j - 1;
  return assignment;
}

/// Exact transport between uniform marginals of different sizes. Row i
/// supplies `cols` units and column j absorbs `rows` units, so all flows are
/// integers; successive shortest paths with Johnson potentials and a dense
/// Dijkstra on the residual bipartite graph.
inline TransportPlan solve_min_cost_flow(const CostMatrix& cost) {
  const std::size_t ra = cost.rows;
  const std::size_t cb = cost.cols;
  const std::size_t nodes = ra + cb;  // rows first, then columns
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<std::int64_t> flow(ra * cb, 0);
  std::vector<std::int64_t> supply(ra, static_cast<std::int64_t>(cb));
  std::vector<std::int64_t> demand(cb, static_cast<std::int64_t>(ra));
  std::vector<double> potential(nodes, 0.0);
  std::vector<double> dist(nodes);
  std::vector<std::size_t> parent(nodes);
  std::vector<char> done(nodes);
  std::int64_t remaining = static_cast<std::int64_t>(ra * cb);
  constexpr std::size_t none = std::numeric_limits<std::size_t>::max();

  while (remaining > 0) {
    std::fill(dist.begin(), dist.end(), inf);
    std::fill(parent.begin(), parent.end(), none);
    std::fill(done.begin(), done.end(), 0);
    // Virtual source edges to every row with supply left (reduced cost -π_i).
    for (std::size_t i = 0; i < ra; ++i)
      if (supply[i] > 0) dist[i] = -potential[i];
    double sink_dist = inf;
    std::size_t sink_col = none;
    for (;;) {
      std::size_t u = none;
      for (std::size_t x = 0; x < nodes; ++x)
        if (!done[x] && dist[x] < inf && (u == none || dist[x] < dist[u])) u = x;
      if (u == none) break;
      done[u] = 1;
      if (u < ra) {
        for (std::size_t j = 0; j < cb; ++j) {
          const std::size_t w = ra + j;
          if (done[w]) continue;  // settled; rounding must not reopen it
          const double nd = dist[u] + cost(u, j) + potential[u] - potential[w];
          if (nd < dist[w]) {
            dist[w] = nd;
            parent[w] = u;
          }
        }
      } else {
        const std::size_t j = u - ra;
        // Virtual sink edge (reduced cost π_j).
        if (demand[j] > 0 && dist[u] + potential[u] < sink_dist) {
          sink_dist = dist[u] + potential[u];
          sink_col = j;
        }
        for (std::size_t i = 0; i < ra; ++i) {
          if (flow[i * cb + j] == 0 || done[i]) continue;
          const double nd = dist[u] - cost(i, j) + potential[u] - potential[i];
          if (nd < dist[i]) {
            dist[i] = nd;
            parent[i] = u;
          }
        }
      }
    }
    if (sink_col == none) throw std::logic_error("min-cost flow: no augmenting path");
    for (std::size_t x = 0; x < nodes; ++x) potential[x] += std::min(dist[x], sink_dist);

    // Walk back from the sink column to a source row to find the bottleneck.
    std::int64_t push = demand[sink_col];
    std::size_t node = ra + sink_col;
    while (parent[node] != none) {
      const std::size_t prev = parent[node];
      if (prev >= ra) push = std::min(push, flow[node * cb + (prev - ra)]);  // backward edge
      node = prev;
    }
    push = std::min(push, supply[node]);
    supply[node] -= push;
    demand[sink_col] -= push;
    remaining -= push;
    node = ra + sink_col;
    while (parent[node] != none) {
      const std::size_t prev = parent[node];
      if (prev < ra) flow[prev * cb + (node - ra)] += push;
      else flow[node * cb + (prev - ra)] -= push;
      node = prev;
    }
  }
  TransportPlan plan{ra, cb, std::vector<double>(ra * cb, 0.0)};
  const double unit = 1.0 / static_cast<double>(ra * cb);
  for (std::size_t k = 0; k < flow.size(); ++k) plan.mass[k] = static_cast<double>(flow[k]) * unit;
  return plan;
}

/// Optimal coupling. Square problems go through the assignment solver, other
/// shapes through min-cost flow.
inline WassersteinEstimate solve_exact(const CostMatrix& cost) {
  if (cost.empty()) throw std::invalid_argument("solve_exact: empty sample");
  if (cost.rows == cost.cols)
    return make_estimate(permutation_plan(solve_assignment(cost)), cost, "exact-assignment");
  return make_estimate(solve_min_cost_flow(cost), cost, "min-cost-flow");
}

inline constexpr std::size_t brute_force_limit = 8;

/// Exhaustive minimum over all permutations; the first minimizer in
/// lexicographic order wins ties.
inline WassersteinEstimate brute_force_plan(const CostMatrix& cost) {
  if (cost.rows != cost.cols) throw std::invalid_argument("brute_force_plan needs a square cost matrix");
  if (cost.empty()) throw std::invalid_argument("brute_force_plan: empty sample");
  if (cost.rows > brute_force_limit)
    throw std::invalid_argument("brute_force_plan supports at most 8 paths per sample");
  const std::size_t m = cost.rows;
  std::vector<std::size_t> perm(m);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::vector<std::size_t> best = perm;
  double best_total = std::numeric_limits<double>::infinity();
  do {
    double total = 0.0;
    for (std::size_t i = 0; i < m; ++i) total += cost(i, perm[i]);
    if (total < best_total) {
      best_total = total;
      best = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return make_estimate(permutation_plan(best), cost, "brute-force");
}

namespace detail {

/// Projects a nearly feasible plan onto the exact uniform marginals without
/// moving more mass than the violation (scale down, then add the rank-one
/// correction of the row/column deficits).
inline void round_to_marginals(TransportPlan& plan) {
  const double a = 1.0 / static_cast<double>(plan.rows);
  const double b = 1.0 / static_cast<double>(plan.cols);
  auto rows = plan.row_sums();
  for (std::size_t i = 0; i < plan.rows; ++i) {
    const double scale = rows[i] > a ? a / rows[i] : 1.0;
    for (std::size_t j = 0; j < plan.cols; ++j) plan.mass[i * plan.cols + j] *= scale;
  }
  auto cols = plan.col_sums();
  for (std::size_t j = 0; j < plan.cols; ++j) {
    const double scale = cols[j] > b ? b / cols[j] : 1.0;
    for (std::size_t i = 0; i < plan.rows; ++i) plan.mass[i * plan.cols + j] *= scale;
  }
  rows = plan.row_sums();
  cols = plan.col_sums();
  std::vector<double> row_gap(plan.rows);
  std::vector<double> col_gap(plan.cols);
  double total_gap = 0.0;
  for (std::size_t i = 0; i < plan.rows; ++i) {
    row_gap[i] = std::max(a - rows[i], 0.0);
    total_gap += row_gap[i];
  }
  for (std::size_t j = 0; j < plan.cols; ++j) col_gap[j] = std::max(b - cols[j], 0.0);
  if (total_gap <= 0.0) return;
  for (std::size_t i = 0; i < plan.rows; ++i)
    for (std::size_t j = 0; j < plan.cols; ++j)
      plan.mass[i * plan.cols + j] += row_gap[i] * col_gap[j] / total_gap;
}

inline double log_sum_exp(const std::vector<double>& x) {
  const double top = *std::max_element(x.begin(), x.end());
  if (!std::isfinite(top)) return top;
  double sum = 0.0;
  for (double v : x) sum += std::exp(v - top);
  return top + std::log(sum);
}

}  // namespace detail

struct EntropicOptions {
  std::size_t max_iters = 200000;
  double tol = 1e-4;  // max row-marginal violation before rounding, relative to 1/rows
};

/// Log-domain matrix scaling for the entropically regularized problem with
/// regularization η, annealed from η = max cost down to the target. The
/// final plan is rounded onto the exact marginals and its transport cost is
/// reported (not the regularized objective), so the value is never below the
/// exact optimum.
inline WassersteinEstimate solve_entropic(const CostMatrix& cost, double eta,
                                          EntropicOptions options = {}) {
  if (cost.empty()) throw std::invalid_argument("solve_entropic: empty sample");
  if (!(eta > 0.0)) throw std::invalid_argument("solve_entropic: eta must be > 0");
  const std::size_t ra = cost.rows;
  const std::size_t cb = cost.cols;
  const double log_a = -std::log(static_cast<double>(ra));
  const double log_b = -std::log(static_cast<double>(cb));
  std::vector<double> f(ra, 0.0);
  std::vector<double> g(cb, 0.0);
  std::vector<double> row_buf(cb);
  std::vector<double> col_buf(ra);

  auto update_f = [&](double level) {
    for (std::size_t i = 0; i < ra; ++i) {
      for (std::size_t j = 0; j < cb; ++j) row_buf[j] = (g[j] - cost(i, j)) / level;
      f[i] = level * (log_a - detail::log_sum_exp(row_buf));
    }
  };
  auto update_g = [&](double level) {
    for (std::size_t j = 0; j < cb; ++j) {
      for (std::size_t i = 0; i < ra; ++i) col_buf[i] = (f[i] - cost(i, j)) / level;
      g[j] = level * (log_b - detail::log_sum_exp(col_buf));
    }
  };
  // After a g-update the columns are exact; the rows carry the violation.
  auto row_violation = [&](double level) {
    double worst = 0.0;
    for (std::size_t i = 0; i < ra; ++i) {
      for (std::size_t j = 0; j < cb; ++j) row_buf[j] = (f[i] + g[j] - cost(i, j)) / level;
      worst = std::max(worst, std::abs(std::exp(detail::log_sum_exp(row_buf) - log_a) - 1.0));
    }
    return worst;
  };

  const double top = std::max(cost.max(), eta);
  std::size_t iterations = 0;
  double violation = std::numeric_limits<double>::infinity();
  for (double level = top;; level = std::max(level * 0.5, eta)) {
    const bool final_level = level == eta;
    const double level_tol = final_level ? options.tol : std::max(options.tol, 1e-3);
    violation = std::numeric_limits<double>::infinity();
    while (violation > level_tol && iterations < options.max_iters) {
      update_f(level);
      update_g(level);
      ++iterations;
      if (iterations % 10 == 0) violation = row_violation(level);
    }
    if (final_level || iterations >= options.max_iters) {
      if (!final_level || violation > level_tol) {
        std::ostringstream msg;
        msg << "entropic solver did not converge: marginal violation " << violation << " after "
            << iterations << " iterations";
        throw ConvergenceError(msg.str(), violation, iterations);
      }
      break;
    }
  }

  TransportPlan plan{ra, cb, std::vector<double>(ra * cb)};
  for (std::size_t i = 0; i < ra; ++i)
    for (std::size_t j = 0; j < cb; ++j)
      plan.mass[i * cb + j] = std::exp((f[i] + g[j] - cost(i, j)) / eta);
  detail::round_to_marginals(plan);
  std::ostringstream tag;
  tag << "entropic(eta=" << eta << ",iterations=" << iterations << ")";
  return make_estimate(std::move(plan), cost, tag.str());
}

enum class Solver { exact, brute_force, entropic };

inline Solver solver_from_string(const std::string& name) {
  if (name == "exact") return Solver::exact;
  if (name == "brute") return Solver::brute_force;
  if (name == "entropic") return Solver::entropic;
  throw std::invalid_argument("unknown solver '" + name + "' (known: exact, brute, entropic)");
}

/// Entropic runs use η = eta_relative * max cost.
inline WassersteinEstimate empirical_wasserstein(const PathSample& a, const PathSample& b, double p,
                                                 Solver solver = Solver::exact,
                                                 double eta_relative = 1e-3, unsigned threads = 1) {
  const auto cost = cost_matrix(a, b, p, threads);
  switch (solver) {
    case Solver::brute_force:
      return brute_force_plan(cost);
    case Solver::entropic: {
      const double eta = eta_relative * cost.max();
      if (eta <= 0.0) {
        // All costs vanish; the independent coupling is optimal.
        TransportPlan product{cost.rows, cost.cols,
                              std::vector<double>(cost.rows * cost.cols,
                                                  1.0 / static_cast<double>(cost.rows * cost.cols))};
        return make_estimate(std::move(product), cost, "entropic(zero-cost)");
      }
      return solve_entropic(cost, eta);
    }
    case Solver::exact:
    default:
      return solve_exact(cost);
  }
}

inline nlohmann::json to_json(const WassersteinEstimate& est, const nlohmann::json& seed_meta = {}) {
  return {{"value", est.value},
          {"p", est.p},
          {"solver", est.solver},
          {"m_A", est.plan.rows},
          {"m_B", est.plan.cols},
          {"seed_meta", seed_meta}};
}

/// Plan as CSV triples (i, j, mass); zero entries are omitted.
inline void write_plan_csv(std::ostream& out, const TransportPlan& plan) {
  out << "i,j,mass\n";
  const auto old_precision = out.precision(17);
  for (std::size_t i = 0; i < plan.rows; ++i)
    for (std::size_t j = 0; j < plan.cols; ++j)
      if (plan(i, j) != 0.0) out << i << ',' << j << ',' << plan(i, j) << '\n';
  out.precision(old_precision);
}

}  // namespace flightwp
