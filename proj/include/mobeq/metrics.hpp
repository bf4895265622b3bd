#pragma once

#include <cstddef>
#include <vector>

#include "mobeq/equilibrium.hpp"
#include "mobeq/model.hpp"

namespace mobeq {

/// Per-iteration indicators. Per-mode vectors are indexed by engine mode
/// (0 = walking); per-zone tables are row-major (zone, mode).
struct KpiBundle {
  std::size_t n_zones = 0;
  std::size_t n_modes = 0;

  double travelers = 0.0;
  double avg_travel_time_min = 0.0;
  double co2_kg = 0.0;
  double tax_revenue = 0.0;
  std::vector<double> revenue;         // USD per mode
  std::vector<double> operating_cost;  // USD per mode
  std::vector<double> co2_by_mode;     // kg per mode
  std::vector<double> riders;          // travelers per (zone, mode)
  std::vector<double> mode_share;      // fraction per (zone, mode)
  std::vector<double> zone_revenue;    // USD per (zone, mode)

  double share(std::size_t i, std::size_t m) const { return mode_share[i * n_modes + m]; }
  double riders_at(std::size_t i, std::size_t m) const { return riders[i * n_modes + m]; }

  bool operator==(const KpiBundle&) const = default;
};

/// Demand-weighted travel time, fares collected, fleet operating cost, tax on
/// taxable modes, full-occupancy CO2 and per-zone mode shares.
KpiBundle compute_kpis(const GameInstance& inst, const Configuration& cfg,
                       const CityModel& city, const ScenarioControls& controls);

/// Element-wise b - a.
struct KpiDelta {
  double avg_travel_time_min = 0.0;
  double co2_kg = 0.0;
  double tax_revenue = 0.0;
  std::vector<double> revenue;
  std::vector<double> operating_cost;
  std::vector<double> mode_share;
  std::vector<double> riders;
};

KpiDelta kpi_delta(const KpiBundle& a, const KpiBundle& b);

}  // namespace mobeq
