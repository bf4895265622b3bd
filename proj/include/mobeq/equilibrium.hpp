#pragma once

#include <chrono>
#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mobeq/model.hpp"
#include "mobeq/simplex.hpp"

namespace mobeq {

inline constexpr double kFeasibilityTol = 1e-9;
inline constexpr double kNashTol = 1e-9;
inline constexpr double kObjectiveRelTol = 1e-6;
/// Largest N^2 M K the dense oracle accepts.
inline constexpr std::size_t kOracleMaxVariables = 5000;

/// Mode-split fractions x_ijk^m, stored densely in (i, j, k, m) order.
struct Configuration {
  std::size_t n_zones = 0;
  std::size_t n_modes = 0;
  std::size_t n_populations = 0;
  std::vector<double> x;

  static Configuration zeros(const GameInstance& inst);
  /// Everyone with positive demand walks.
  static Configuration all_walking(const GameInstance& inst);

  double operator()(std::size_t i, std::size_t j, std::size_t k, std::size_t m) const {
    return x[index(i, j, k, m)];
  }
  double& operator()(std::size_t i, std::size_t j, std::size_t k, std::size_t m) {
    return x[index(i, j, k, m)];
  }
  std::size_t index(std::size_t i, std::size_t j, std::size_t k, std::size_t m) const {
    return ((i * n_zones + j) * n_populations + k) * n_modes + m;
  }
  bool matches(const GameInstance& inst) const;

  bool operator==(const Configuration&) const = default;
};

/// Travelers departing zone i by mode m: sum over j, k of d_ijk x_ijk^m.
double zone_load(const GameInstance& inst, const Configuration& cfg, std::size_t i,
                 std::size_t m);
/// Total system cost, sum of c d x.
double total_cost(const GameInstance& inst, const Configuration& cfg);

struct NashWitness {
  std::size_t origin = 0;
  std::size_t destination = 0;
  std::size_t population = 0;
  std::size_t mode = 0;
  std::size_t alternative = 0;
  double cost = 0.0;
  double alternative_cost = 0.0;
  double alternative_slack = 0.0;  // spare seats on the alternative
};

struct NashCertificate {
  bool verdict = true;
  std::vector<NashWitness> witnesses;
};

enum class SolverKind { decomposed, oracle };
const char* to_string(SolverKind kind);

struct SolveStats {
  double objective = 0.0;
  std::vector<std::size_t> per_zone_iterations;
  std::chrono::nanoseconds wall_time{0};
  SolverKind solver_kind = SolverKind::decomposed;
};

struct EquilibriumResult {
  Configuration configuration;
  SolveStats stats;
};

enum class Execution { serial, parallel };

struct SolveOptions {
  Execution execution = Execution::parallel;
  /// Checked between zone solves; exceeding it throws SolveTimeout.
  std::optional<std::chrono::steady_clock::time_point> deadline;
};

class SolveTimeout : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Thrown by the oracle on an instance larger than kOracleMaxVariables, or
/// when the dense solve does not reach optimality.
class OracleError : public std::runtime_error {
 public:
  OracleError(const std::string& what, std::optional<LpStatus> status = std::nullopt)
      : std::runtime_error(what), status_(status) {}
  std::optional<LpStatus> status() const { return status_; }

 private:
  std::optional<LpStatus> status_;
};

/// Checks the five feasibility conditions. Equalities use kFeasibilityTol
/// scaled by max(1, |rhs|); capacities allow kFeasibilityTol absolute slack.
/// Throws std::invalid_argument if shapes do not match.
ValidationReport check_feasible(const GameInstance& inst, const Configuration& cfg);

/// Equilibrium by per-origin decomposition into transportation problems.
/// Serial and parallel execution produce bit-identical results.
/// Throws PreconditionError if the instance is invalid or some population's
/// demand does not add up to its size.
EquilibriumResult solve_equilibrium(const GameInstance& inst, const SolveOptions& options = {});

/// The full LP as printed: capacity rows, one assignment row per positive-demand
/// (i, j, k), and one population row per k. Zero-demand triples get no columns.
struct EquilibriumLp {
  LinearProgram lp;
  struct Column {
    std::size_t i, j, k, m;
  };
  std::vector<Column> columns;
  std::size_t capacity_rows = 0;
  std::size_t assignment_rows = 0;
  std::size_t population_rows = 0;
  std::size_t excluded_triples = 0;  // (i, j, k) with d_ijk = 0, including i = j
};

EquilibriumLp assemble_equilibrium_lp(const GameInstance& inst);

/// Cross-check solve of the assembled LP with the dense simplex.
/// An inconsistent instance is reported as infeasible via OracleError.
EquilibriumResult oracle_solve(const GameInstance& inst);

/// Checks that no traveler on a used mode has a strictly cheaper unsaturated
/// alternative.
NashCertificate verify_nash(const GameInstance& inst, const Configuration& cfg);

}  // namespace mobeq
