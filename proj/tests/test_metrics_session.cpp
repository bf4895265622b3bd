#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <set>

#include "mobeq/city_io.hpp"
#include "mobeq/metrics.hpp"
#include "mobeq/session.hpp"
#include "support/generators.hpp"

using namespace mobeq;
using namespace mobeq::testing;

namespace {

CityModel boston() { return load_city(default_data_dir() / "boston.city"); }

ScenarioControls controls_file(const CityModel& city, const std::string& name) {
  return load_controls(default_data_dir() / "controls" / (name + ".controls"), city);
}

}  // namespace

TEST(Kpis, EveryoneWalking) {
  const CityModel city = small_city();
  const ScenarioControls c = small_controls();
  const GameInstance inst = build_instance(city, c);
  const KpiBundle k = compute_kpis(inst, Configuration::all_walking(inst), city, c);
  for (double r : k.revenue) EXPECT_EQ(r, 0.0);
  EXPECT_EQ(k.co2_kg, 0.0);
  EXPECT_EQ(k.tax_revenue, 0.0);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_EQ(k.share(i, kWalking), 1.0);
}

TEST(Kpis, SevenHundredFiftyBusRidersAtTwoDollars) {
  CityModel city = small_city();
  city.populations = {{0, "employees", 35.0, 1000.0}};
  city.demand = DemandTensor(3, 1);
  city.demand(0, 1, 0) = 1000;
  ScenarioControls c;
  c.fleet[{0, 1}] = 15;
  const GameInstance inst = build_instance(city, c);
  Configuration cfg = Configuration::zeros(inst);
  cfg(0, 1, 0, 1) = 0.75;
  cfg(0, 1, 0, kWalking) = 0.25;
  const KpiBundle k = compute_kpis(inst, cfg, city, c);
  EXPECT_DOUBLE_EQ(k.revenue[1], 1500.0);
  EXPECT_DOUBLE_EQ(k.operating_cost[1], 15 * 90.0);
}

TEST(Kpis, HandComputedBundle) {
  // One trip type, split across walk / bus / amod.
  CityModel city = small_city();
  city.populations = {{0, "employees", 20.0, 100.0}};
  city.demand = DemandTensor(3, 1);
  city.demand(0, 1, 0) = 100;
  ScenarioControls c;
  c.fleet[{0, 1}] = 2;
  c.fleet[{0, 2}] = 10;
  c.tax_rates[2] = 0.25;
  const GameInstance inst = build_instance(city, c);
  Configuration cfg = Configuration::zeros(inst);
  cfg(0, 1, 0, 0) = 0.5;
  cfg(0, 1, 0, 1) = 0.3;
  cfg(0, 1, 0, 2) = 0.2;
  const KpiBundle k = compute_kpis(inst, cfg, city, c);
  const double miles = inst.dist(0, 1);
  const double hours = 50 * miles / 3.1 + 30 * miles / 15.0 + 20 * miles / 22.0;
  EXPECT_NEAR(k.avg_travel_time_min, 60.0 * hours / 100.0, 1e-9);
  EXPECT_NEAR(k.revenue[1], 30 * 2.0, 1e-9);
  EXPECT_NEAR(k.revenue[2], 20 * miles * 1.0, 1e-9);
  EXPECT_NEAR(k.tax_revenue, 0.25 * 20 * miles, 1e-9);
  EXPECT_NEAR(k.co2_by_mode[1], 2800.0 * 30 * miles / 50 / 1000, 1e-9);
  EXPECT_NEAR(k.co2_by_mode[2], 350.0 * 20 * miles / 4 / 1000, 1e-9);
  EXPECT_NEAR(k.co2_kg, k.co2_by_mode[1] + k.co2_by_mode[2], 1e-12);
  EXPECT_DOUBLE_EQ(k.operating_cost[2], 10 * 12.0);
  EXPECT_NEAR(k.share(0, 1), 0.3, 1e-12);
  EXPECT_EQ(k.share(2, 1), 0.0);
}

TEST(Kpis, InvariantsOnSolvedScenarios) {
  std::mt19937_64 rng(31);
  std::uniform_int_distribution<int> fleet(0, 12);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const CityModel city = small_city();
  for (int n = 0; n < 50; ++n) {
    ScenarioControls c;
    for (std::size_t i = 0; i < 3; ++i) {
      c.fleet[{i, 1}] = fleet(rng);
      c.fleet[{i, 2}] = fleet(rng);
    }
    c.tax_rates[2] = u(rng);
    const GameInstance inst = build_instance(city, c);
    const auto solved = solve_equilibrium(inst);
    const KpiBundle k = compute_kpis(inst, solved.configuration, city, c);
    for (std::size_t i = 0; i < 3; ++i) {
      double sum = 0.0;
      for (std::size_t m = 0; m < k.n_modes; ++m) sum += k.share(i, m);
      EXPECT_NEAR(sum, 1.0, 1e-9);
    }
    EXPECT_LE(k.tax_revenue, k.revenue[2] + 1e-12);
    EXPECT_GE(k.co2_kg, 0.0);
    double co2 = 0.0;
    for (double v : k.co2_by_mode) co2 += v;
    EXPECT_NEAR(co2, k.co2_kg, 1e-9);
  }
}

TEST(Kpis, TravelTimeHomogeneousInDemand) {
  CityModel city = small_city();
  ScenarioControls c;
  for (std::size_t i = 0; i < 3; ++i) {
    c.fleet[{i, 1}] = 1000;
    c.fleet[{i, 2}] = 1000;
  }
  const GameInstance inst = build_instance(city, c);
  const KpiBundle base = compute_kpis(inst, solve_equilibrium(inst).configuration, city, c);
  CityModel scaled = city;
  for (double lambda : {0.5, 3.0, 10.0}) {
    scaled = city;
    for (std::size_t i = 0; i < 3; ++i) {
      for (std::size_t j = 0; j < 3; ++j) {
        for (std::size_t k = 0; k < 2; ++k) scaled.demand(i, j, k) *= lambda;
      }
    }
    for (auto& p : scaled.populations) p.size *= lambda;
    const GameInstance si = build_instance(scaled, c);
    const KpiBundle k = compute_kpis(si, solve_equilibrium(si).configuration, scaled, c);
    EXPECT_NEAR(k.avg_travel_time_min, base.avg_travel_time_min, 1e-9);
  }
}

TEST(Kpis, DeltaIsElementwise) {
  KpiBundle a, b;
  a.avg_travel_time_min = 10;
  b.avg_travel_time_min = 7;
  a.revenue = {0, 1};
  b.revenue = {0, 4};
  a.operating_cost = b.operating_cost = {0, 0};
  a.mode_share = {1, 0};
  b.mode_share = {0.5, 0.5};
  a.riders = b.riders = {0, 0};
  const KpiDelta d = kpi_delta(a, b);
  EXPECT_EQ(d.avg_travel_time_min, -3);
  EXPECT_EQ(d.revenue, (std::vector<double>{0, 3}));
  EXPECT_EQ(d.mode_share, (std::vector<double>{-0.5, 0.5}));
}

TEST(Session, CreateGivesEmptyHistoryAndDistinctIds) {
  const Session a = create_session(boston());
  const Session b = create_session(boston());
  EXPECT_EQ(a.size(), 0u);
  EXPECT_NE(a.id(), b.id());
  std::set<std::string> ids;
  for (int n = 0; n < 1000; ++n) ids.insert(new_session_id());
  EXPECT_EQ(ids.size(), 1000u);
}

TEST(Session, InvalidCityIsRejectedWithReport) {
  CityModel city = small_city();
  city.populations[0].size += 1;
  try {
    create_session(city);
    FAIL();
  } catch (const ValidationError& e) {
    EXPECT_TRUE(e.report().has("population_demand_mismatch"));
  }
}

TEST(Session, BostonDoubledBuses) {
  Session s(boston());
  const auto& r1 = s.run_iteration(controls_file(s.city(), "nominal"));
  EXPECT_EQ(r1.iteration, 1u);
  const KpiBundle k1 = r1.kpis;
  const auto& r2 = s.run_iteration(controls_file(s.city(), "double_buses"));
  EXPECT_EQ(r2.iteration, 2u);
  for (std::size_t z : {0, 1}) EXPECT_DOUBLE_EQ(r2.kpis.share(z, 1), 2.0 * k1.share(z, 1));
  const IterationDiff d = s.diff(1, 2);
  EXPECT_LT(d.delta.avg_travel_time_min, 0.0);
  EXPECT_GT(d.delta.co2_kg, 0.0);
  EXPECT_GT(d.delta.revenue[1], 0.0);
}

TEST(Session, DiffWithItselfIsZero) {
  Session s(small_city());
  s.run_iteration(small_controls());
  const IterationDiff d = s.diff(1, 1);
  EXPECT_EQ(d.delta.avg_travel_time_min, 0.0);
  EXPECT_EQ(d.delta.co2_kg, 0.0);
  for (double v : d.delta.mode_share) EXPECT_EQ(v, 0.0);
  EXPECT_THROW(s.diff(1, 2), IterationNotFound);
  EXPECT_THROW(s.diff(0, 1), IterationNotFound);
}

TEST(Session, InvalidControlsLeaveHistoryUntouched) {
  Session s(small_city());
  ScenarioControls bad = small_controls();
  bad.tax_rates[2] = 1.5;
  EXPECT_THROW(s.run_iteration(bad), ValidationError);
  EXPECT_EQ(s.size(), 0u);
}

TEST(Session, RerunAppendsIdenticalReportAndResetClears) {
  Session s(small_city());
  EXPECT_THROW(s.rerun(), IterationNotFound);
  s.run_iteration(small_controls());
  s.rerun();
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s.report(2).kpis, s.report(1).kpis);
  EXPECT_EQ(s.report(2).configuration, s.report(1).configuration);
  s.reset();
  EXPECT_EQ(s.size(), 0u);
  EXPECT_EQ(s.run_iteration(small_controls()).iteration, 1u);
}

TEST(Session, StoredReportsReverify) {
  Session s(boston());
  for (const char* name : {"nominal", "double_buses", "double_amod_fare"}) {
    s.run_iteration(controls_file(s.city(), name));
  }
  for (const auto& r : s.history()) {
    const GameInstance inst = build_instance(s.city(), r.controls);
    EXPECT_TRUE(check_feasible(inst, r.configuration).ok());
    EXPECT_TRUE(verify_nash(inst, r.configuration).verdict);
    EXPECT_TRUE(r.nash.verdict);
  }
}

TEST(Session, ReplayFromScratchIsBitIdentical) {
  Session a(boston()), b(boston());
  for (const char* name : {"nominal", "double_buses", "double_amod_fare"}) {
    a.run_iteration(controls_file(a.city(), name));
    b.run_iteration(controls_file(b.city(), name), {Execution::serial, std::nullopt});
  }
  for (std::size_t n = 1; n <= 3; ++n) {
    EXPECT_EQ(a.report(n).kpis, b.report(n).kpis);
    EXPECT_EQ(a.report(n).configuration, b.report(n).configuration);
  }
}

TEST(SessionStore, ConcurrentStoreOperations) {
  SessionStore store;
  auto e = store.create("tiny", small_city());
  EXPECT_EQ(store.find(e->session.id()), e);
  EXPECT_TRUE(store.erase(e->session.id()));
  EXPECT_FALSE(store.erase(e->session.id()));
  EXPECT_EQ(store.find(e->session.id()), nullptr);
}
