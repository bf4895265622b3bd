#pragma once

#include <cstddef>
#include <utility>
#include <vector>

namespace mobeq {

enum class RowSense { less_equal, equal };

/// min c'x  s.t.  rows,  x >= 0.
struct LinearProgram {
  struct Row {
    std::vector<std::pair<std::size_t, double>> terms;  // (variable, coefficient)
    RowSense sense = RowSense::equal;
    double rhs = 0.0;
  };

  std::size_t n_vars = 0;
  std::vector<double> objective;
  std::vector<Row> rows;
};

enum class LpStatus { optimal, infeasible, unbounded, iteration_limit };

const char* to_string(LpStatus status);

struct LpResult {
  LpStatus status = LpStatus::iteration_limit;
  std::vector<double> x;
  double objective = 0.0;
  std::size_t iterations = 0;
};

/// Dense two-phase primal simplex on a full tableau. Dantzig pricing, falling
/// back to Bland's rule once a run of degenerate pivots suggests cycling.
/// Meant for small problems (a few thousand columns).
LpResult solve_lp(const LinearProgram& lp, std::size_t max_iterations = 200000);

}  // namespace mobeq
