#include "mobeq/metrics.hpp"

#include <stdexcept>

namespace mobeq {

KpiBundle compute_kpis(const GameInstance& inst, const Configuration& cfg,
                       const CityModel& city, const ScenarioControls& controls) {
  if (!cfg.matches(inst)) {
    throw std::invalid_argument("configuration shape does not match the instance");
  }
  if (city.n_zones() != inst.n_zones || city.n_modes() != inst.n_modes ||
      city.n_populations() != inst.n_populations) {
    throw std::invalid_argument("city does not match the instance");
  }
  const std::size_t n = inst.n_zones, k_count = inst.n_populations, m_count = inst.n_modes;

  KpiBundle kpi;
  kpi.n_zones = n;
  kpi.n_modes = m_count;
  kpi.revenue.assign(m_count, 0.0);
  kpi.operating_cost.assign(m_count, 0.0);
  kpi.co2_by_mode.assign(m_count, 0.0);
  kpi.riders.assign(n * m_count, 0.0);
  kpi.mode_share.assign(n * m_count, 0.0);
  kpi.zone_revenue.assign(n * m_count, 0.0);

  std::vector<double> passenger_miles(m_count, 0.0);
  double weighted_hours = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t k = 0; k < k_count; ++k) {
        const double d = inst.d(i, j, k);
        if (d == 0.0) continue;
        kpi.travelers += d;
        for (std::size_t m = 0; m < m_count; ++m) {
          const double riders = d * cfg(i, j, k, m);
          if (riders == 0.0) continue;
          weighted_hours += riders * inst.t(i, j, m);
          kpi.riders[i * m_count + m] += riders;
          kpi.zone_revenue[i * m_count + m] += riders * inst.p(i, j, m);
          passenger_miles[m] += riders * inst.dist(i, j);
        }
      }
    }
  }
  kpi.avg_travel_time_min = kpi.travelers > 0.0 ? 60.0 * weighted_hours / kpi.travelers : 0.0;

  for (std::size_t i = 0; i < n; ++i) {
    double departures = 0.0;
    for (std::size_t m = 0; m < m_count; ++m) departures += kpi.riders[i * m_count + m];
    for (std::size_t m = 0; m < m_count; ++m) {
      kpi.revenue[m] += kpi.zone_revenue[i * m_count + m];
      if (departures > 0.0) {
        kpi.mode_share[i * m_count + m] = kpi.riders[i * m_count + m] / departures;
      }
    }
  }

  for (std::size_t m = 0; m < m_count; ++m) {
    const Mode mode = city.mode(m);
    double vehicles = 0.0;
    if (m != kWalking) {
      for (std::size_t i = 0; i < n; ++i) {
        vehicles += static_cast<double>(controls.vehicles(i, m));
      }
    }
    kpi.operating_cost[m] = vehicles * mode.operating_cost_per_vehicle_hour * inst.window_hours;
    const double vehicle_miles = passenger_miles[m] / mode.seats_per_vehicle;
    kpi.co2_by_mode[m] = mode.emissions_g_per_vehicle_mile * vehicle_miles / 1000.0;
    kpi.co2_kg += kpi.co2_by_mode[m];
    if (mode.taxable) kpi.tax_revenue += controls.tax_rate(m) * kpi.revenue[m];
  }
  return kpi;
}

namespace {

std::vector<double> minus(const std::vector<double>& b, const std::vector<double>& a) {
  if (a.size() != b.size()) throw std::invalid_argument("KPI bundles have different shapes");
  std::vector<double> out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = b[i] - a[i];
  return out;
}

}  // namespace

KpiDelta kpi_delta(const KpiBundle& a, const KpiBundle& b) {
  KpiDelta d;
  d.avg_travel_time_min = b.avg_travel_time_min - a.avg_travel_time_min;
  d.co2_kg = b.co2_kg - a.co2_kg;
  d.tax_revenue = b.tax_revenue - a.tax_revenue;
  d.revenue = minus(b.revenue, a.revenue);
  d.operating_cost = minus(b.operating_cost, a.operating_cost);
  d.mode_share = minus(b.mode_share, a.mode_share);
  d.riders = minus(b.riders, a.riders);
  return d;
}

}  // namespace mobeq
