#include "mobeq/simplex.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace mobeq {

const char* to_string(LpStatus status) {
  switch (status) {
    case LpStatus::optimal: return "optimal";
    case LpStatus::infeasible: return "infeasible";
    case LpStatus::unbounded: return "unbounded";
    case LpStatus::iteration_limit: return "iteration_limit";
  }
  return "unknown";
}

namespace {

constexpr double kPivotTol = 1e-9;
constexpr double kCostTol = 1e-9;
constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();

class Tableau {
 public:
  Tableau(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), a_((rows + 1) * (cols + 1), 0.0), basis_(rows, kNone) {}

  double& at(std::size_t r, std::size_t c) { return a_[r * (cols_ + 1) + c]; }
  double at(std::size_t r, std::size_t c) const { return a_[r * (cols_ + 1) + c]; }
  double& rhs(std::size_t r) { return at(r, cols_); }
  double& obj(std::size_t c) { return at(rows_, c); }
  double obj_value() const { return -at(rows_, cols_); }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::vector<std::size_t>& basis() { return basis_; }

  void pivot(std::size_t r, std::size_t c) {
    const double inv = 1.0 / at(r, c);
    for (std::size_t j = 0; j <= cols_; ++j) at(r, j) *= inv;
    at(r, c) = 1.0;
    for (std::size_t i = 0; i <= rows_; ++i) {
      if (i == r) continue;
      const double f = at(i, c);
      if (f == 0.0) continue;
      for (std::size_t j = 0; j <= cols_; ++j) at(i, j) -= f * at(r, j);
      at(i, c) = 0.0;
    }
    basis_[r] = c;
  }

  /// Sets the objective row to `costs` and prices out the current basis.
  void load_objective(const std::vector<double>& costs) {
    for (std::size_t j = 0; j <= cols_; ++j) obj(j) = j < costs.size() ? costs[j] : 0.0;
    for (std::size_t r = 0; r < rows_; ++r) {
      const double f = obj(basis_[r]);
      if (f == 0.0) continue;
      for (std::size_t j = 0; j <= cols_; ++j) obj(j) -= f * at(r, j);
    }
  }

  // Returns optimal / unbounded / iteration_limit. Columns >= `allowed` never enter.
  LpStatus optimize(std::size_t allowed, std::size_t max_iter, std::size_t& iterations) {
    bool bland = false;
    std::size_t degenerate_run = 0;
    while (true) {
      if (iterations >= max_iter) return LpStatus::iteration_limit;
      std::size_t enter = kNone;
      double best = -kCostTol;
      for (std::size_t j = 0; j < allowed; ++j) {
        const double rc = obj(j);
        if (bland) {
          if (rc < -kCostTol) {
            enter = j;
            break;
          }
        } else if (rc < best) {
          best = rc;
          enter = j;
        }
      }
      if (enter == kNone) return LpStatus::optimal;

      std::size_t leave = kNone;
      double best_ratio = std::numeric_limits<double>::infinity();
      for (std::size_t r = 0; r < rows_; ++r) {
        const double a = at(r, enter);
        if (a <= kPivotTol) continue;
        const double ratio = rhs(r) / a;
        if (leave == kNone || ratio < best_ratio - 1e-12 ||
            (ratio <= best_ratio + 1e-12 && basis_[r] < basis_[leave])) {
          best_ratio = std::min(best_ratio, ratio);
          leave = r;
        }
      }
      if (leave == kNone) return LpStatus::unbounded;

      degenerate_run = best_ratio <= 1e-12 ? degenerate_run + 1 : 0;
      if (degenerate_run > 50) bland = true;
      pivot(leave, enter);
      ++iterations;
    }
  }

 private:
  std::size_t rows_;
  std::size_t cols_;
  std::vector<double> a_;
  std::vector<std::size_t> basis_;
};

}  // namespace

LpResult solve_lp(const LinearProgram& lp, std::size_t max_iterations) {
  if (lp.objective.size() != lp.n_vars) {
    throw std::invalid_argument("objective length does not match variable count");
  }
  const std::size_t m = lp.rows.size();
  const std::size_t n = lp.n_vars;

  // Column layout: structural | slack or surplus (one per inequality) | artificial.
  std::vector<double> sign(m, 1.0);
  std::size_t n_slack = 0;
  std::vector<std::size_t> slack_col(m, kNone);
  std::vector<bool> needs_artificial(m, false);
  for (std::size_t r = 0; r < m; ++r) {
    const auto& row = lp.rows[r];
    if (row.rhs < 0.0) sign[r] = -1.0;
    if (row.sense == RowSense::less_equal) slack_col[r] = n + n_slack++;
    // Equalities always get an artificial; so do inequalities flipped to >=.
    needs_artificial[r] = row.sense == RowSense::equal || sign[r] < 0.0;
  }
  std::size_t n_art = 0;
  std::vector<std::size_t> art_col(m, kNone);
  for (std::size_t r = 0; r < m; ++r) {
    if (needs_artificial[r]) art_col[r] = n + n_slack + n_art++;
  }
  const std::size_t cols = n + n_slack + n_art;
  const std::size_t first_art = n + n_slack;

  Tableau t(m, cols);
  for (std::size_t r = 0; r < m; ++r) {
    const auto& row = lp.rows[r];
    for (const auto& [var, coef] : row.terms) {
      if (var >= n) throw std::invalid_argument("row references unknown variable");
      t.at(r, var) += sign[r] * coef;
    }
    if (slack_col[r] != kNone) t.at(r, slack_col[r]) = sign[r];
    if (art_col[r] != kNone) {
      t.at(r, art_col[r]) = 1.0;
      t.basis()[r] = art_col[r];
    } else {
      t.basis()[r] = slack_col[r];
    }
    t.rhs(r) = sign[r] * row.rhs;
  }

  LpResult result;
  double rhs_scale = 1.0;
  for (const auto& row : lp.rows) rhs_scale += std::abs(row.rhs);

  if (n_art > 0) {
    std::vector<double> phase1(cols, 0.0);
    for (std::size_t j = first_art; j < cols; ++j) phase1[j] = 1.0;
    t.load_objective(phase1);
    const LpStatus s = t.optimize(cols, max_iterations, result.iterations);
    if (s == LpStatus::iteration_limit) {
      result.status = s;
      return result;
    }
    if (t.obj_value() > 1e-9 * rhs_scale) {
      result.status = LpStatus::infeasible;
      return result;
    }
    // Drive zero-level artificials out of the basis; rows where that fails
    // are linearly dependent and stay inert.
    for (std::size_t r = 0; r < m; ++r) {
      if (t.basis()[r] < first_art) continue;
      std::size_t best = kNone;
      double best_abs = kPivotTol;
      for (std::size_t j = 0; j < first_art; ++j) {
        if (std::abs(t.at(r, j)) > best_abs) {
          best_abs = std::abs(t.at(r, j));
          best = j;
        }
      }
      if (best != kNone) t.pivot(r, best);
    }
  }

  std::vector<double> costs(cols, 0.0);
  std::copy(lp.objective.begin(), lp.objective.end(), costs.begin());
  t.load_objective(costs);
  const LpStatus s = t.optimize(first_art, max_iterations, result.iterations);
  result.status = s;
  if (s != LpStatus::optimal) return result;

  result.x.assign(n, 0.0);
  for (std::size_t r = 0; r < m; ++r) {
    const std::size_t b = t.basis()[r];
    if (b < n) result.x[b] = std::max(0.0, t.rhs(r));
  }
  result.objective = 0.0;
  for (std::size_t j = 0; j < n; ++j) result.objective += lp.objective[j] * result.x[j];
  return result;
}

}  // namespace mobeq
