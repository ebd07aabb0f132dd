#pragma once

// Dense two-phase primal simplex for small box-bounded linear programs.
//
//   extremize  c.x   s.t.  a_r.x (<= | >=) b_r,   lo_j <= x_j <= hi_j
//
// Variables are shifted and scaled to z = (x - lo) / (hi - lo) in [0,1]
// (fixed variables drop out) and z <= 1 becomes an explicit row. Every row
// is then scaled so that |rhs| = 1 (or max|a| = 1 when the rhs vanishes),
// which makes all feasibility tolerances relative to the row's right-hand
// side, and the objective is scaled to unit max-norm. Pivoting follows Bland's rule with lowest-index
// tie breaking, so identical inputs give bit-identical outputs.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

#include "errors.hpp"

namespace mdiqkd {

enum class Relation { kLessEqual, kGreaterEqual };
enum class Sense { kMinimize, kMaximize };
enum class LpStatus { kOptimal, kInfeasible };

struct LinearConstraint {
  std::vector<double> coeffs;
  Relation relation = Relation::kLessEqual;
  double rhs = 0.0;
};

struct VarBounds {
  double lo = 0.0;
  double hi = 1.0;
};

struct LinearProgram {
  std::size_t n_vars = 0;
  std::vector<double> objective;
  Sense sense = Sense::kMinimize;
  std::vector<LinearConstraint> constraints;
  std::vector<VarBounds> var_bounds;  // empty means [0,1] for every variable

  VarBounds bounds(std::size_t j) const { return var_bounds.empty() ? VarBounds{} : var_bounds[j]; }

  void validate() const {
    if (n_vars == 0) throw ValidationError("linear program has no variables");
    if (objective.size() != n_vars) throw ValidationError("objective length differs from n_vars");
    if (!var_bounds.empty() && var_bounds.size() != n_vars) {
      throw ValidationError("var_bounds length differs from n_vars");
    }
    for (double c : objective) {
      if (!std::isfinite(c)) throw ValidationError("objective coefficient is not finite");
    }
    for (std::size_t j = 0; j < n_vars; ++j) {
      const VarBounds b = bounds(j);
      if (!std::isfinite(b.lo) || !std::isfinite(b.hi) || b.lo > b.hi) {
        throw ValidationError("variable " + std::to_string(j) + " has invalid bounds");
      }
    }
    for (std::size_t r = 0; r < constraints.size(); ++r) {
      const auto& con = constraints[r];
      if (con.coeffs.size() != n_vars) {
        throw ValidationError("constraint " + std::to_string(r) + " has wrong length");
      }
      if (!std::isfinite(con.rhs)) throw ValidationError("constraint " + std::to_string(r) + " rhs is not finite");
      for (double a : con.coeffs) {
        if (!std::isfinite(a)) throw ValidationError("constraint " + std::to_string(r) + " has a non-finite coefficient");
      }
    }
  }
};

struct LpSolution {
  LpStatus status = LpStatus::kInfeasible;
  double objective_value = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> assignment;

  bool optimal() const { return status == LpStatus::kOptimal; }
};

struct SimplexTolerances {
  double pivot = 1e-11;         // smallest admissible pivot magnitude
  double reduced_cost = 1e-11;  // entering threshold
  double feasibility = 1e-9;    // phase-one residual accepted as feasible
};

namespace detail {

class Tableau {
 public:
  Tableau(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), a_(rows * (cols + 1), 0.0), basis_(rows, 0) {}

  double& at(std::size_t r, std::size_t c) { return a_[r * (cols_ + 1) + c]; }
  double at(std::size_t r, std::size_t c) const { return a_[r * (cols_ + 1) + c]; }
  double& rhs(std::size_t r) { return at(r, cols_); }
  double rhs(std::size_t r) const { return at(r, cols_); }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::vector<std::size_t>& basis() { return basis_; }
  const std::vector<std::size_t>& basis() const { return basis_; }

  void pivot(std::size_t pr, std::size_t pc, std::vector<double>& cost, double& cost_rhs) {
    const double inv = 1.0 / at(pr, pc);
    for (std::size_t c = 0; c <= cols_; ++c) at(pr, c) *= inv;
    at(pr, pc) = 1.0;
    for (std::size_t r = 0; r < rows_; ++r) {
      if (r == pr) continue;
      const double f = at(r, pc);
      if (f == 0.0) continue;
      for (std::size_t c = 0; c <= cols_; ++c) at(r, c) -= f * at(pr, c);
      at(r, pc) = 0.0;
      if (rhs(r) < 0.0 && rhs(r) > -1e-13) rhs(r) = 0.0;
    }
    const double f = cost[pc];
    if (f != 0.0) {
      for (std::size_t c = 0; c < cols_; ++c) cost[c] -= f * at(pr, c);
      cost_rhs -= f * rhs(pr);
      cost[pc] = 0.0;
    }
    basis_[pr] = pc;
  }

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> a_;
  std::vector<std::size_t> basis_;
};

enum class PhaseResult { kOptimal, kUnbounded };

// Minimizes the cost row over columns [0, allowed_cols). `cost` holds reduced
// costs; `cost_rhs` holds minus the current objective.
inline PhaseResult run_simplex(Tableau& t, std::vector<double>& cost, double& cost_rhs,
                               std::size_t allowed_cols, const SimplexTolerances& tol,
                               std::size_t& iterations, std::size_t iteration_cap) {
  while (true) {
    std::size_t enter = allowed_cols;
    for (std::size_t c = 0; c < allowed_cols; ++c) {
      if (cost[c] < -tol.reduced_cost) {
        enter = c;
        break;
      }
    }
    if (enter == allowed_cols) return PhaseResult::kOptimal;

    std::size_t leave = t.rows();
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < t.rows(); ++r) {
      const double a = t.at(r, enter);
      if (a <= tol.pivot) continue;
      const double ratio = std::max(t.rhs(r), 0.0) / a;
      if (leave == t.rows() || ratio < best ||
          (ratio == best && t.basis()[r] < t.basis()[leave])) {
        best = ratio;
        leave = r;
      }
    }
    if (leave == t.rows()) return PhaseResult::kUnbounded;
    if (++iterations > iteration_cap) {
      throw SolverDefect("simplex iteration cap exceeded");
    }
    t.pivot(leave, enter, cost, cost_rhs);
  }
}

}  // namespace detail

inline LpSolution solve(const LinearProgram& lp, const SimplexTolerances& tol = {}) {
  lp.validate();
  const std::size_t n = lp.n_vars;
  std::vector<double> range(n);
  for (std::size_t j = 0; j < n; ++j) range[j] = lp.bounds(j).hi - lp.bounds(j).lo;

  struct Row {
    std::vector<double> a;
    bool ge;
    double b;
  };
  std::vector<Row> rows;
  rows.reserve(lp.constraints.size() + n);

  for (const auto& con : lp.constraints) {
    const bool ge = con.relation == Relation::kGreaterEqual;
    double shifted = con.rhs;
    double amax = 0.0;
    std::vector<double> a(n);
    for (std::size_t j = 0; j < n; ++j) {
      shifted -= con.coeffs[j] * lp.bounds(j).lo;
      a[j] = con.coeffs[j] * range[j];
      amax = std::max(amax, std::abs(a[j]));
    }
    if (amax == 0.0) {
      // 0 <= b or 0 >= b, up to rounding in the shift: vacuous or infeasible.
      const double slack = 1e-12 * std::max(1.0, std::abs(con.rhs));
      const bool ok = ge ? shifted <= slack : shifted >= -slack;
      if (!ok) return {};
      continue;
    }
    rows.push_back({std::move(a), ge, shifted});
  }
  for (std::size_t j = 0; j < n; ++j) {
    if (range[j] == 0.0) continue;
    std::vector<double> a(n, 0.0);
    a[j] = 1.0;
    rows.push_back({std::move(a), false, 1.0});
  }

  for (auto& row : rows) {
    double amax = 0.0;
    for (double v : row.a) amax = std::max(amax, std::abs(v));
    const double scale = std::abs(row.b) >= 1e-14 * amax ? std::abs(row.b) : amax;
    for (double& v : row.a) v /= scale;
    row.b /= scale;
    if (row.b < 0.0) {
      for (double& v : row.a) v = -v;
      row.b = -row.b;
      row.ge = !row.ge;
    }
  }

  const std::size_t m = rows.size();
  std::size_t n_art = 0;
  for (const auto& row : rows) n_art += row.ge ? 1 : 0;

  // Columns: [structural n][slack m][artificial n_art]
  const std::size_t slack0 = n;
  const std::size_t art0 = n + m;
  const std::size_t cols = n + m + n_art;
  detail::Tableau t(m, cols);
  std::size_t next_art = art0;
  for (std::size_t r = 0; r < m; ++r) {
    for (std::size_t j = 0; j < n; ++j) t.at(r, j) = rows[r].a[j];
    t.at(r, slack0 + r) = rows[r].ge ? -1.0 : 1.0;
    t.rhs(r) = rows[r].b;
    if (rows[r].ge) {
      t.at(r, next_art) = 1.0;
      t.basis()[r] = next_art++;
    } else {
      t.basis()[r] = slack0 + r;
    }
  }

  const std::size_t cap = 10000 * n;
  std::size_t iterations = 0;

  // Phase one: minimize the sum of artificials.
  if (n_art > 0) {
    std::vector<double> cost(cols, 0.0);
    double cost_rhs = 0.0;
    for (std::size_t c = art0; c < cols; ++c) cost[c] = 1.0;
    for (std::size_t r = 0; r < m; ++r) {
      if (t.basis()[r] < art0) continue;
      for (std::size_t c = 0; c < cols; ++c) cost[c] -= t.at(r, c);
      cost_rhs -= t.rhs(r);
    }
    if (detail::run_simplex(t, cost, cost_rhs, cols, tol, iterations, cap) != detail::PhaseResult::kOptimal) {
      throw SolverDefect("phase one reported an unbounded objective");
    }
    if (-cost_rhs > tol.feasibility) return {};

    // Drive zero-level artificials out of the basis where possible.
    for (std::size_t r = 0; r < m; ++r) {
      if (t.basis()[r] < art0) continue;
      for (std::size_t c = 0; c < art0; ++c) {
        if (std::abs(t.at(r, c)) > tol.pivot) {
          t.pivot(r, c, cost, cost_rhs);
          break;
        }
      }
    }
  }

  // Phase two over structural and slack columns only.
  std::vector<double> scaled_obj(n);
  double cmax = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    scaled_obj[j] = (lp.sense == Sense::kMaximize ? -1.0 : 1.0) * lp.objective[j] * range[j];
    cmax = std::max(cmax, std::abs(scaled_obj[j]));
  }
  std::vector<double> cost(cols, 0.0);
  double cost_rhs = 0.0;
  if (cmax > 0.0) {
    for (std::size_t j = 0; j < n; ++j) cost[j] = scaled_obj[j] / cmax;
  }
  for (std::size_t r = 0; r < m; ++r) {
    const std::size_t b = t.basis()[r];
    const double f = cost[b];
    if (f == 0.0) continue;
    for (std::size_t c = 0; c < cols; ++c) cost[c] -= f * t.at(r, c);
    cost_rhs -= f * t.rhs(r);
  }
  if (detail::run_simplex(t, cost, cost_rhs, art0, tol, iterations, cap) != detail::PhaseResult::kOptimal) {
    throw SolverDefect("box-constrained linear program reported unbounded");
  }

  LpSolution sol;
  sol.status = LpStatus::kOptimal;
  sol.assignment.assign(n, 0.0);
  for (std::size_t r = 0; r < m; ++r) {
    const std::size_t b = t.basis()[r];
    if (b < n) sol.assignment[b] = std::max(t.rhs(r), 0.0);
  }
  double obj = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    const VarBounds vb = lp.bounds(j);
    sol.assignment[j] = std::clamp(vb.lo + range[j] * sol.assignment[j], vb.lo, vb.hi);
    obj += lp.objective[j] * sol.assignment[j];
  }
  sol.objective_value = obj;
  return sol;
}

/// Largest violation of any constraint at `x`, measured in the units of that
/// constraint's rhs (same scaling the solver uses).
inline double max_scaled_violation(const LinearProgram& lp, const std::vector<double>& x) {
  double worst = 0.0;
  for (const auto& con : lp.constraints) {
    double lhs = 0.0;
    double amax = 0.0;
    double shifted = con.rhs;
    for (std::size_t j = 0; j < lp.n_vars; ++j) {
      const VarBounds vb = lp.bounds(j);
      lhs += con.coeffs[j] * x[j];
      shifted -= con.coeffs[j] * vb.lo;
      amax = std::max(amax, std::abs(con.coeffs[j] * (vb.hi - vb.lo)));
    }
    if (amax == 0.0) continue;
    const double scale = std::abs(shifted) >= 1e-14 * amax ? std::abs(shifted) : amax;
    const double gap = con.relation == Relation::kLessEqual ? lhs - con.rhs : con.rhs - lhs;
    worst = std::max(worst, gap / scale);
  }
  return worst;
}

}  // namespace mdiqkd
