#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "mobeq/equilibrium.hpp"
#include "mobeq/simplex.hpp"
#include "mobeq/transport.hpp"
#include "support/generators.hpp"

using namespace mobeq;
using namespace mobeq::testing;

namespace {

double rel_gap(double a, double b) { return std::abs(a - b) / std::max(1.0, std::abs(b)); }

// Transport problem minimum by exhaustive search over a coarse grid; only
// valid for problems whose optimum lies on that grid.
double grid_minimum(const TransportProblem& p, double step) {
  // Two sources, two sinks, sink 0 unbounded: choose flow to sink 1 for each source.
  double best = std::numeric_limits<double>::infinity();
  for (double a = 0; a <= p.supply[0] + 1e-12; a += step) {
    for (double b = 0; b <= p.supply[1] + 1e-12; b += step) {
      if (a + b > p.sink_capacity[1].value() + 1e-12) continue;
      const double cost = a * p.cost(0, 1) + (p.supply[0] - a) * p.cost(0, 0) +
                          b * p.cost(1, 1) + (p.supply[1] - b) * p.cost(1, 0);
      best = std::min(best, cost);
    }
  }
  return best;
}

}  // namespace

TEST(Transport, CheapestSinkUntilFull) {
  TransportProblem p;
  p.supply = {100};
  p.sink_capacity = {Capacity::unbounded(), Capacity::seats(60)};
  p.unit_cost = {10, 4};
  const auto s = solve_transport(p);
  EXPECT_EQ(s.flow[1], 60.0);
  EXPECT_EQ(s.flow[0], 40.0);
  EXPECT_EQ(s.objective, 640.0);
}

TEST(Transport, ReroutesEarlierSourceWhenCheaper) {
  // Source 0 grabs the shared seats first; source 1 gains more from them.
  TransportProblem p;
  p.supply = {10, 10};
  p.sink_capacity = {Capacity::unbounded(), Capacity::seats(10)};
  p.unit_cost = {5, 4, 20, 1};
  const auto s = solve_transport(p);
  EXPECT_DOUBLE_EQ(s.objective, 10 * 5 + 10 * 1);
  EXPECT_DOUBLE_EQ(s.flow[1 * 2 + 1], 10.0);
  EXPECT_NEAR(s.objective, grid_minimum(p, 1.0), 1e-9);
}

TEST(Transport, RandomTwoByTwoMatchesGrid) {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> cost(0, 9), amount(0, 12);
  for (int n = 0; n < 300; ++n) {
    TransportProblem p;
    p.supply = {double(amount(rng)), double(amount(rng))};
    p.sink_capacity = {Capacity::unbounded(), Capacity::seats(amount(rng))};
    p.unit_cost = {double(cost(rng)), double(cost(rng)), double(cost(rng)), double(cost(rng))};
    const auto s = solve_transport(p);
    EXPECT_NEAR(s.objective, grid_minimum(p, 1.0), 1e-9);
  }
}

TEST(Transport, TieGoesToLowestSink) {
  TransportProblem p;
  p.supply = {10};
  p.sink_capacity = {Capacity::unbounded(), Capacity::seats(100), Capacity::seats(100)};
  p.unit_cost = {3, 3, 3};
  const auto s = solve_transport(p);
  EXPECT_EQ(s.flow[0], 10.0);
}

TEST(Simplex, SmallKnownOptimum) {
  // min -x - y  s.t. x + 2y <= 4, 3x + y <= 6  ->  x = 1.6, y = 1.2
  LinearProgram lp;
  lp.n_vars = 2;
  lp.objective = {-1, -1};
  lp.rows = {{{{0, 1.0}, {1, 2.0}}, RowSense::less_equal, 4},
             {{{0, 3.0}, {1, 1.0}}, RowSense::less_equal, 6}};
  const auto r = solve_lp(lp);
  ASSERT_EQ(r.status, LpStatus::optimal);
  EXPECT_NEAR(r.x[0], 1.6, 1e-9);
  EXPECT_NEAR(r.x[1], 1.2, 1e-9);
  EXPECT_NEAR(r.objective, -2.8, 1e-9);
}

TEST(Simplex, DetectsInfeasibleAndUnbounded) {
  LinearProgram infeasible;
  infeasible.n_vars = 1;
  infeasible.objective = {1};
  infeasible.rows = {{{{0, 1.0}}, RowSense::equal, 1}, {{{0, 1.0}}, RowSense::equal, 2}};
  EXPECT_EQ(solve_lp(infeasible).status, LpStatus::infeasible);

  LinearProgram unbounded;
  unbounded.n_vars = 2;
  unbounded.objective = {-1, 0};
  unbounded.rows = {{{{0, 1.0}, {1, -1.0}}, RowSense::less_equal, 1}};
  EXPECT_EQ(solve_lp(unbounded).status, LpStatus::unbounded);
}

TEST(Simplex, NegativeRightHandSide) {
  // min x  s.t. -x <= -3  ->  x = 3
  LinearProgram lp;
  lp.n_vars = 1;
  lp.objective = {1};
  lp.rows = {{{{0, -1.0}}, RowSense::less_equal, -3}};
  const auto r = solve_lp(lp);
  ASSERT_EQ(r.status, LpStatus::optimal);
  EXPECT_NEAR(r.x[0], 3.0, 1e-12);
}

TEST(Equilibrium, SixtyForty) {
  const GameInstance inst = sixty_forty();
  const auto result = solve_equilibrium(inst);
  EXPECT_DOUBLE_EQ(result.configuration(0, 1, 0, 1), 0.6);
  EXPECT_DOUBLE_EQ(result.configuration(0, 1, 0, kWalking), 0.4);
  EXPECT_EQ(result.stats.objective, 640.0);
  EXPECT_TRUE(verify_nash(inst, result.configuration).verdict);

  // Exhaustive enumeration over integer bus loads.
  double best = std::numeric_limits<double>::infinity();
  for (int bus = 0; bus <= 60; ++bus) best = std::min(best, 4.0 * bus + 10.0 * (100 - bus));
  EXPECT_EQ(best, result.stats.objective);
}

TEST(Equilibrium, SwappedSplitHasWitness) {
  const GameInstance inst = sixty_forty();
  const Configuration swapped = sixty_forty_split(inst, 40);
  EXPECT_TRUE(check_feasible(inst, swapped).ok());
  const auto cert = verify_nash(inst, swapped);
  ASSERT_FALSE(cert.verdict);
  ASSERT_FALSE(cert.witnesses.empty());
  const auto& w = cert.witnesses.front();
  EXPECT_EQ(w.origin, 0u);
  EXPECT_EQ(w.destination, 1u);
  EXPECT_EQ(w.mode, kWalking);
  EXPECT_EQ(w.alternative, 1u);
  EXPECT_DOUBLE_EQ(w.alternative_slack, 20.0);
}

TEST(Equilibrium, UnboundedCapacitiesPickCheapestLowestIndex) {
  std::mt19937_64 rng(1);
  for (int n = 0; n < 50; ++n) {
    GameInstance inst = random_instance(rng);
    for (auto& c : inst.capacity) c = Capacity::unbounded();
    const auto r = solve_equilibrium(inst);
    for (std::size_t i = 0; i < inst.n_zones; ++i) {
      for (std::size_t j = 0; j < inst.n_zones; ++j) {
        for (std::size_t k = 0; k < inst.n_populations; ++k) {
          if (inst.d(i, j, k) == 0.0) continue;
          std::size_t best = 0;
          for (std::size_t m = 1; m < inst.n_modes; ++m) {
            if (inst.c(i, j, k, m) < inst.c(i, j, k, best)) best = m;
          }
          EXPECT_EQ(r.configuration(i, j, k, best), 1.0);
        }
      }
    }
  }
}

TEST(Equilibrium, ZeroDemandGivesZeroConfiguration) {
  GameInstance inst = GameInstance::zeros(3, 3, 2);
  for (double& c : inst.cost) c = 1.0;
  const auto r = solve_equilibrium(inst);
  EXPECT_EQ(r.stats.objective, 0.0);
  for (double x : r.configuration.x) EXPECT_EQ(x, 0.0);
}

TEST(Equilibrium, PopulationMismatchIsPrecondition) {
  GameInstance inst = sixty_forty();
  inst.population_size[0] = 90;
  EXPECT_THROW(solve_equilibrium(inst), PreconditionError);
}

TEST(Equilibrium, OracleDetectsInconsistentPopulation) {
  GameInstance inst = sixty_forty();
  inst.population_size[0] = 90;
  try {
    oracle_solve(inst);
    FAIL() << "expected OracleError";
  } catch (const OracleError& e) {
    ASSERT_TRUE(e.status().has_value());
    EXPECT_EQ(*e.status(), LpStatus::infeasible);
  }
}

TEST(Equilibrium, OracleRejectsOversizedInstances) {
  GameInstance inst = GameInstance::zeros(30, 4, 3);
  EXPECT_THROW(oracle_solve(inst), OracleError);
}

TEST(Equilibrium, OracleMatchesWorkedExamples) {
  EXPECT_NEAR(oracle_solve(sixty_forty()).stats.objective, 640.0, 640.0 * 1e-6);
  GameInstance empty = GameInstance::zeros(2, 2, 1);
  EXPECT_EQ(oracle_solve(empty).stats.objective, 0.0);
}

TEST(Equilibrium, TwoByTwoByTwoByThreeBeatsRandomFeasible) {
  std::mt19937_64 rng(2024);
  InstanceShape shape;
  shape.min_zones = shape.max_zones = 2;
  shape.min_populations = shape.max_populations = 2;
  shape.min_modes = shape.max_modes = 3;
  shape.zero_demand_probability = 0.0;
  const GameInstance inst = random_instance(rng, shape);
  const double best = oracle_solve(inst).stats.objective;
  for (int n = 0; n < 1000; ++n) {
    const Configuration cfg = random_feasible(inst, rng);
    ASSERT_TRUE(check_feasible(inst, cfg).ok());
    EXPECT_LE(best, total_cost(inst, cfg) + 1e-9 * std::max(1.0, best));
  }
}

TEST(Feasibility, AllWalkingIsFeasible) {
  std::mt19937_64 rng(9);
  for (int n = 0; n < 100; ++n) {
    const GameInstance inst = random_instance(rng);
    EXPECT_TRUE(check_feasible(inst, Configuration::all_walking(inst)).ok());
  }
}

TEST(Feasibility, IncompleteAssignmentIsCondition3) {
  const GameInstance inst = sixty_forty();
  Configuration cfg = sixty_forty_split(inst, 60);
  cfg(0, 1, 0, kWalking) -= 0.1;
  EXPECT_TRUE(check_feasible(inst, cfg).has("incomplete_assignment"));
}

TEST(Feasibility, CapacityExcessReportsResidual) {
  GameInstance inst = GameInstance::zeros(2, 2, 1);
  inst.demand(0, 1, 0) = 1000;
  inst.population_size[0] = 1000;
  inst.capacity[inst.capacity_index(0, 1)] = Capacity::seats(750);
  Configuration cfg = Configuration::zeros(inst);
  cfg(0, 1, 0, 1) = 0.751;
  cfg(0, 1, 0, kWalking) = 0.249;
  const auto r = check_feasible(inst, cfg);
  ASSERT_TRUE(r.has("capacity_exceeded"));
  for (const auto& v : r.violations) {
    if (v.code == "capacity_exceeded") EXPECT_NEAR(v.residual, 1.0, 1e-9);
  }
}

TEST(Feasibility, OtherConditions) {
  const GameInstance inst = sixty_forty();
  Configuration cfg = sixty_forty_split(inst, 60);
  cfg(0, 1, 0, 1) = -0.1;
  cfg(0, 1, 0, kWalking) = 1.1;
  EXPECT_TRUE(check_feasible(inst, cfg).has("negative_share"));
  cfg = sixty_forty_split(inst, 60);
  cfg(1, 1, 0, kWalking) = 0.5;
  EXPECT_TRUE(check_feasible(inst, cfg).has("intra_zone_travel"));
  Configuration wrong_shape;
  EXPECT_THROW(check_feasible(inst, wrong_shape), std::invalid_argument);
}

TEST(Equilibrium, FeasibleNashAndOptimalOnRandomInstances) {
  std::mt19937_64 rng(77);
  for (int n = 0; n < 200; ++n) {
    const GameInstance inst = random_instance(rng);
    const auto r = solve_equilibrium(inst);
    ASSERT_TRUE(check_feasible(inst, r.configuration).ok());
    ASSERT_TRUE(verify_nash(inst, r.configuration).verdict);
    EXPECT_LE(rel_gap(r.stats.objective, oracle_solve(inst).stats.objective), kObjectiveRelTol);
    EXPECT_NEAR(r.stats.objective, total_cost(inst, r.configuration),
                1e-9 * std::max(1.0, r.stats.objective));
  }
}

TEST(Equilibrium, SerialAndParallelAreBitIdentical) {
  std::mt19937_64 rng(4);
  InstanceShape shape;
  shape.min_zones = 6;
  shape.max_zones = 12;
  for (int n = 0; n < 20; ++n) {
    const GameInstance inst = random_instance(rng, shape);
    const auto a = solve_equilibrium(inst, {Execution::serial, std::nullopt});
    const auto b = solve_equilibrium(inst, {Execution::parallel, std::nullopt});
    EXPECT_EQ(a.configuration.x, b.configuration.x);
    EXPECT_EQ(a.stats.objective, b.stats.objective);
    EXPECT_EQ(a.stats.per_zone_iterations, b.stats.per_zone_iterations);
  }
}

TEST(Equilibrium, RepeatedSolvesAreBitIdentical) {
  std::mt19937_64 rng(8);
  const GameInstance inst = random_instance(rng);
  const auto a = solve_equilibrium(inst);
  for (int n = 0; n < 5; ++n) EXPECT_EQ(solve_equilibrium(inst).configuration, a.configuration);
}

TEST(Equilibrium, EquivariantUnderZoneRelabeling) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 50; ++trial) {
    const GameInstance inst = random_instance(rng);
    const std::size_t n = inst.n_zones;
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);

    // Relabel i -> perm[i], keeping destination order within each origin so
    // the tie-break sees the same sequence.
    GameInstance relabeled = GameInstance::zeros(n, inst.n_modes, inst.n_populations);
    relabeled.population_size = inst.population_size;
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t m = 0; m < inst.n_modes; ++m) {
        relabeled.capacity[relabeled.capacity_index(perm[i], m)] = inst.cap(i, m);
      }
      for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t k = 0; k < inst.n_populations; ++k) {
          relabeled.demand(perm[i], perm[j], k) = inst.d(i, j, k);
          for (std::size_t m = 0; m < inst.n_modes; ++m) {
            relabeled.cost[relabeled.cost_index(perm[i], perm[j], k, m)] = inst.c(i, j, k, m);
          }
        }
      }
    }
    const auto a = solve_equilibrium(inst);
    const auto b = solve_equilibrium(relabeled);
    EXPECT_NEAR(a.stats.objective, b.stats.objective, 1e-9 * std::max(1.0, a.stats.objective));
    // Each origin faces the same transportation problem, so its optimal cost
    // is label-free even where ties allow several optimal splits.
    for (std::size_t i = 0; i < n; ++i) {
      double ca = 0.0, cb = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t k = 0; k < inst.n_populations; ++k) {
          for (std::size_t m = 0; m < inst.n_modes; ++m) {
            ca += inst.c(i, j, k, m) * inst.d(i, j, k) * a.configuration(i, j, k, m);
            cb += relabeled.c(perm[i], perm[j], k, m) * relabeled.d(perm[i], perm[j], k) *
                  b.configuration(perm[i], perm[j], k, m);
          }
        }
      }
      EXPECT_NEAR(ca, cb, 1e-9 * std::max(1.0, ca));
    }
    // With a monotone relabeling the destination order is unchanged, so the
    // canonical solution maps over exactly.
    if (std::is_sorted(perm.begin(), perm.end())) {
      EXPECT_EQ(a.configuration.x, b.configuration.x);
    }
  }
}

TEST(Equilibrium, OriginPermutationMapsSolutionExactly) {
  // Cyclic shift of origins only: destinations keep their labels.
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    const GameInstance inst = random_instance(rng);
    const std::size_t n = inst.n_zones;
    // Swap the full origin blocks of zones 0 and 1 by permuting only origin
    // data; a valid instance needs d_ii = 0, so also require those entries be zero.
    GameInstance swapped = inst;
    bool ok = true;
    for (std::size_t k = 0; k < inst.n_populations; ++k) {
      ok = ok && inst.d(0, 1, k) == 0.0 && inst.d(1, 0, k) == 0.0;
    }
    if (!ok || n < 2) continue;
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t k = 0; k < inst.n_populations; ++k) {
        swapped.demand(0, j, k) = inst.d(1, j, k);
        swapped.demand(1, j, k) = inst.d(0, j, k);
        for (std::size_t m = 0; m < inst.n_modes; ++m) {
          swapped.cost[swapped.cost_index(0, j, k, m)] = inst.c(1, j, k, m);
          swapped.cost[swapped.cost_index(1, j, k, m)] = inst.c(0, j, k, m);
        }
      }
    }
    for (std::size_t m = 0; m < inst.n_modes; ++m) {
      swapped.capacity[swapped.capacity_index(0, m)] = inst.cap(1, m);
      swapped.capacity[swapped.capacity_index(1, m)] = inst.cap(0, m);
    }
    const auto a = solve_equilibrium(inst);
    const auto b = solve_equilibrium(swapped);
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t k = 0; k < inst.n_populations; ++k) {
        for (std::size_t m = 0; m < inst.n_modes; ++m) {
          EXPECT_EQ(a.configuration(0, j, k, m), b.configuration(1, j, k, m));
          EXPECT_EQ(a.configuration(1, j, k, m), b.configuration(0, j, k, m));
        }
      }
    }
  }
}

TEST(Equilibrium, ExpiredDeadlineTimesOut) {
  std::mt19937_64 rng(3);
  const GameInstance inst = random_instance(rng);
  SolveOptions opts;
  opts.deadline = std::chrono::steady_clock::now() - std::chrono::seconds(1);
  EXPECT_THROW(solve_equilibrium(inst, opts), SolveTimeout);
}

TEST(AssembledLp, CountsMatchConstraintFamilies) {
  std::mt19937_64 rng(21);
  for (int n = 0; n < 50; ++n) {
    const GameInstance inst = random_instance(rng);
    const auto lp = assemble_equilibrium_lp(inst);
    std::size_t zero_triples = 0, bounded = 0;
    for (std::size_t i = 0; i < inst.n_zones; ++i) {
      for (std::size_t j = 0; j < inst.n_zones; ++j) {
        for (std::size_t k = 0; k < inst.n_populations; ++k) zero_triples += inst.d(i, j, k) == 0.0;
      }
      for (std::size_t m = 0; m < inst.n_modes; ++m) bounded += !inst.cap(i, m).is_unbounded();
    }
    EXPECT_EQ(lp.excluded_triples, zero_triples);
    EXPECT_EQ(lp.lp.n_vars, inst.full_variable_count() - zero_triples * inst.n_modes);
    EXPECT_EQ(lp.columns.size(), lp.lp.n_vars);
    EXPECT_EQ(lp.assignment_rows,
              inst.n_zones * inst.n_zones * inst.n_populations - zero_triples);
    EXPECT_EQ(lp.capacity_rows, bounded);
    EXPECT_EQ(lp.population_rows, inst.n_populations);
    EXPECT_EQ(lp.lp.rows.size(), lp.capacity_rows + lp.assignment_rows + lp.population_rows);
  }
}
