#include "mobeq/equilibrium.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <sstream>

#include "mobeq/transport.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace mobeq {

namespace {

std::string triple(std::size_t i, std::size_t j, std::size_t k) {
  return "i=" + std::to_string(i) + ", j=" + std::to_string(j) + ", k=" + std::to_string(k);
}

void require_solvable(const GameInstance& inst) {
  if (auto r = validate_instance(inst); !r.ok()) {
    throw PreconditionError("invalid game instance:\n" + r.to_string());
  }
  for (std::size_t k = 0; k < inst.n_populations; ++k) {
    const double total = inst.demand.population_total(k);
    const double size = inst.population_size[k];
    if (std::abs(total - size) > kFeasibilityTol * std::max(1.0, std::abs(size))) {
      std::ostringstream os;
      os.precision(12);
      os << "demand of population " << k << " sums to " << total << " but its size is "
         << size;
      throw PreconditionError(os.str());
    }
  }
}

struct ZoneResult {
  std::vector<double> x;  // slice of the configuration for origin i
  double objective = 0.0;
  std::size_t iterations = 0;
};

// Origin i as a transportation problem: sources are the positive-demand
// (j, k) pairs in destination-then-population order, sinks are modes.
ZoneResult solve_zone(const GameInstance& inst, std::size_t i) {
  const std::size_t n = inst.n_zones, k_count = inst.n_populations, m_count = inst.n_modes;
  TransportProblem tp;
  std::vector<std::pair<std::size_t, std::size_t>> sources;
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t k = 0; k < k_count; ++k) {
      const double d = inst.d(i, j, k);
      if (d <= 0.0) continue;
      sources.emplace_back(j, k);
      tp.supply.push_back(d);
      for (std::size_t m = 0; m < m_count; ++m) tp.unit_cost.push_back(inst.c(i, j, k, m));
    }
  }
  tp.sink_capacity.reserve(m_count);
  for (std::size_t m = 0; m < m_count; ++m) tp.sink_capacity.push_back(inst.cap(i, m));

  ZoneResult out;
  out.x.assign(n * k_count * m_count, 0.0);
  if (sources.empty()) return out;

  const TransportSolution sol = solve_transport(tp);
  out.objective = sol.objective;
  out.iterations = sol.augmentations;
  for (std::size_t s = 0; s < sources.size(); ++s) {
    const auto [j, k] = sources[s];
    const double d = tp.supply[s];
    for (std::size_t m = 0; m < m_count; ++m) {
      out.x[(j * k_count + k) * m_count + m] = sol.flow[s * m_count + m] / d;
    }
  }
  return out;
}

}  // namespace

const char* to_string(SolverKind kind) {
  return kind == SolverKind::decomposed ? "decomposed" : "oracle";
}

Configuration Configuration::zeros(const GameInstance& inst) {
  Configuration cfg;
  cfg.n_zones = inst.n_zones;
  cfg.n_modes = inst.n_modes;
  cfg.n_populations = inst.n_populations;
  cfg.x.assign(inst.full_variable_count(), 0.0);
  return cfg;
}

Configuration Configuration::all_walking(const GameInstance& inst) {
  Configuration cfg = zeros(inst);
  for (std::size_t i = 0; i < inst.n_zones; ++i) {
    for (std::size_t j = 0; j < inst.n_zones; ++j) {
      for (std::size_t k = 0; k < inst.n_populations; ++k) {
        if (inst.d(i, j, k) > 0.0) cfg(i, j, k, kWalking) = 1.0;
      }
    }
  }
  return cfg;
}

bool Configuration::matches(const GameInstance& inst) const {
  return n_zones == inst.n_zones && n_modes == inst.n_modes &&
         n_populations == inst.n_populations && x.size() == inst.full_variable_count();
}

double zone_load(const GameInstance& inst, const Configuration& cfg, std::size_t i,
                 std::size_t m) {
  double load = 0.0;
  for (std::size_t j = 0; j < inst.n_zones; ++j) {
    for (std::size_t k = 0; k < inst.n_populations; ++k) {
      load += inst.d(i, j, k) * cfg(i, j, k, m);
    }
  }
  return load;
}

double total_cost(const GameInstance& inst, const Configuration& cfg) {
  double sum = 0.0;
  for (std::size_t i = 0; i < inst.n_zones; ++i) {
    for (std::size_t j = 0; j < inst.n_zones; ++j) {
      for (std::size_t k = 0; k < inst.n_populations; ++k) {
        const double d = inst.d(i, j, k);
        if (d == 0.0) continue;
        for (std::size_t m = 0; m < inst.n_modes; ++m) {
          sum += inst.c(i, j, k, m) * d * cfg(i, j, k, m);
        }
      }
    }
  }
  return sum;
}

ValidationReport check_feasible(const GameInstance& inst, const Configuration& cfg) {
  if (!cfg.matches(inst)) {
    throw std::invalid_argument("configuration shape does not match the instance");
  }
  ValidationReport r;
  const std::size_t n = inst.n_zones, k_count = inst.n_populations, m_count = inst.n_modes;

  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t k = 0; k < k_count; ++k) {
        double sum = 0.0;
        for (std::size_t m = 0; m < m_count; ++m) {
          const double v = cfg(i, j, k, m);
          if (!(v >= 0.0)) {
            r.add("negative_share", "x < 0 at " + triple(i, j, k) + ", m=" + std::to_string(m),
                  {}, v);
          }
          sum += v;
        }
        if (i == j) {
          if (std::abs(sum) > kFeasibilityTol) {
            r.add("intra_zone_travel", "travelers assigned within zone at " + triple(i, j, k),
                  {}, sum);
          }
        } else if (inst.d(i, j, k) > 0.0 && std::abs(sum - 1.0) > kFeasibilityTol) {
          r.add("incomplete_assignment",
                "shares do not sum to 1 at " + triple(i, j, k), {}, sum - 1.0);
        }
      }
    }
  }

  for (std::size_t k = 0; k < k_count; ++k) {
    double served = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        const double d = inst.d(i, j, k);
        for (std::size_t m = 0; m < m_count; ++m) served += d * cfg(i, j, k, m);
      }
    }
    const double size = inst.population_size[k];
    if (std::abs(served - size) > kFeasibilityTol * std::max(1.0, std::abs(size))) {
      r.add("population_total", "served travelers differ from population size, k=" +
                                    std::to_string(k),
            {}, served - size);
    }
  }

  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t m = 0; m < m_count; ++m) {
      const Capacity& cap = inst.cap(i, m);
      if (cap.is_unbounded()) continue;
      const double load = zone_load(inst, cfg, i, m);
      if (load > cap.value() + kFeasibilityTol) {
        r.add("capacity_exceeded",
              "capacity exceeded at i=" + std::to_string(i) + ", m=" + std::to_string(m), {},
              load - cap.value());
      }
    }
  }
  return r;
}

EquilibriumResult solve_equilibrium(const GameInstance& inst, const SolveOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  require_solvable(inst);

  const std::size_t n = inst.n_zones;
  std::vector<ZoneResult> zones(n);
  std::vector<std::exception_ptr> errors(n);
  const auto run_zone = [&](std::size_t i) {
    try {
      if (options.deadline && std::chrono::steady_clock::now() > *options.deadline) {
        throw SolveTimeout("solve exceeded its deadline");
      }
      zones[i] = solve_zone(inst, i);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };

  if (options.execution == Execution::parallel) {
    const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic, 1)
    for (std::ptrdiff_t i = 0; i < count; ++i) run_zone(static_cast<std::size_t>(i));
  } else {
    for (std::size_t i = 0; i < n; ++i) run_zone(i);
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  EquilibriumResult result;
  result.configuration = Configuration::zeros(inst);
  result.stats.solver_kind = SolverKind::decomposed;
  result.stats.per_zone_iterations.resize(n);
  const std::size_t slice = n * inst.n_populations * inst.n_modes;
  for (std::size_t i = 0; i < n; ++i) {
    std::copy(zones[i].x.begin(), zones[i].x.end(),
              result.configuration.x.begin() + static_cast<std::ptrdiff_t>(i * slice));
    result.stats.objective += zones[i].objective;
    result.stats.per_zone_iterations[i] = zones[i].iterations;
  }
  result.stats.wall_time = std::chrono::steady_clock::now() - start;
  return result;
}

EquilibriumLp assemble_equilibrium_lp(const GameInstance& inst) {
  if (auto r = validate_instance(inst); !r.ok()) {
    throw PreconditionError("invalid game instance:\n" + r.to_string());
  }
  const std::size_t n = inst.n_zones, k_count = inst.n_populations, m_count = inst.n_modes;
  EquilibriumLp out;
  LinearProgram& lp = out.lp;

  std::vector<LinearProgram::Row> assignment;
  std::vector<LinearProgram::Row> population(k_count);
  std::vector<LinearProgram::Row> capacity(n * m_count);
  for (std::size_t k = 0; k < k_count; ++k) {
    population[k].sense = RowSense::equal;
    population[k].rhs = inst.population_size[k];
  }

  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t k = 0; k < k_count; ++k) {
        const double d = inst.d(i, j, k);
        if (d <= 0.0) {
          ++out.excluded_triples;
          continue;
        }
        LinearProgram::Row row;
        row.sense = RowSense::equal;
        row.rhs = 1.0;
        for (std::size_t m = 0; m < m_count; ++m) {
          const std::size_t var = out.columns.size();
          out.columns.push_back({i, j, k, m});
          lp.objective.push_back(inst.c(i, j, k, m) * d);
          row.terms.emplace_back(var, 1.0);
          capacity[i * m_count + m].terms.emplace_back(var, d);
          population[k].terms.emplace_back(var, d);
        }
        assignment.push_back(std::move(row));
      }
    }
  }
  lp.n_vars = out.columns.size();

  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t m = 0; m < m_count; ++m) {
      const Capacity& cap = inst.cap(i, m);
      if (cap.is_unbounded()) continue;
      auto& row = capacity[i * m_count + m];
      row.sense = RowSense::less_equal;
      row.rhs = cap.value();
      lp.rows.push_back(std::move(row));
      ++out.capacity_rows;
    }
  }
  out.assignment_rows = assignment.size();
  for (auto& row : assignment) lp.rows.push_back(std::move(row));
  out.population_rows = k_count;
  for (auto& row : population) lp.rows.push_back(std::move(row));
  return out;
}

EquilibriumResult oracle_solve(const GameInstance& inst) {
  const auto start = std::chrono::steady_clock::now();
  if (inst.full_variable_count() > kOracleMaxVariables) {
    throw OracleError("instance has " + std::to_string(inst.full_variable_count()) +
                      " variables; the oracle accepts at most " +
                      std::to_string(kOracleMaxVariables));
  }
  const EquilibriumLp model = assemble_equilibrium_lp(inst);
  const LpResult res = solve_lp(model.lp);
  if (res.status != LpStatus::optimal) {
    throw OracleError(std::string("equilibrium LP is ") + to_string(res.status), res.status);
  }

  EquilibriumResult result;
  result.configuration = Configuration::zeros(inst);
  for (std::size_t v = 0; v < model.columns.size(); ++v) {
    const auto& col = model.columns[v];
    result.configuration(col.i, col.j, col.k, col.m) = res.x[v];
  }
  result.stats.objective = res.objective;
  result.stats.solver_kind = SolverKind::oracle;
  result.stats.per_zone_iterations.assign(inst.n_zones, 0);
  if (!result.stats.per_zone_iterations.empty()) {
    result.stats.per_zone_iterations[0] = res.iterations;
  }
  result.stats.wall_time = std::chrono::steady_clock::now() - start;
  return result;
}

NashCertificate verify_nash(const GameInstance& inst, const Configuration& cfg) {
  if (!cfg.matches(inst)) {
    throw std::invalid_argument("configuration shape does not match the instance");
  }
  const std::size_t n = inst.n_zones, k_count = inst.n_populations, m_count = inst.n_modes;
  NashCertificate cert;
  std::vector<double> load(n * m_count);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t m = 0; m < m_count; ++m) load[i * m_count + m] = zone_load(inst, cfg, i, m);
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t k = 0; k < k_count; ++k) {
        if (inst.d(i, j, k) <= 0.0) continue;
        for (std::size_t m = 0; m < m_count; ++m) {
          if (!(cfg(i, j, k, m) > kNashTol)) continue;
          const double c = inst.c(i, j, k, m);
          for (std::size_t alt = 0; alt < m_count; ++alt) {
            if (alt == m) continue;
            const double c_alt = inst.c(i, j, k, alt);
            if (c <= c_alt + kNashTol) continue;
            const Capacity& cap = inst.cap(i, alt);
            const double l = load[i * m_count + alt];
            if (cap.saturated_by(l, kNashTol)) continue;
            cert.witnesses.push_back(
                {i, j, k, m, alt, c, c_alt,
                 cap.is_unbounded() ? std::numeric_limits<double>::infinity()
                                    : cap.value() - l});
          }
        }
      }
    }
  }
  cert.verdict = cert.witnesses.empty();
  return cert;
}

}  // namespace mobeq
