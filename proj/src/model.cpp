#include "mobeq/model.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "mobeq/travel_cost.hpp"

namespace mobeq {

namespace {

bool finite_nonneg(double v) { return std::isfinite(v) && v >= 0.0; }

std::string fmt_num(double v) {
  std::ostringstream os;
  os.precision(12);
  os << v;
  return os.str();
}

std::string idx_path(const char* field, std::size_t i) {
  return std::string(field) + "[" + std::to_string(i) + "]";
}

}  // namespace

bool ValidationReport::has(const std::string& code) const {
  for (const auto& v : violations) {
    if (v.code == code) return true;
  }
  return false;
}

std::string ValidationReport::to_string() const {
  std::ostringstream os;
  for (const auto& v : violations) {
    if (!v.path.empty()) os << v.path << ": ";
    os << v.message << " [" << v.code << "]\n";
  }
  return os.str();
}

Mode walking_mode(double speed_mph) {
  Mode walk;
  walk.id = kWalking;
  walk.name = "walk";
  walk.speed_mph = speed_mph;
  walk.fare = FareScheme::per_trip(0.0);
  walk.seats_per_vehicle = 1;
  walk.emissions_g_per_vehicle_mile = 0.0;
  walk.operating_cost_per_vehicle_hour = 0.0;
  walk.taxable = false;
  return walk;
}

double DemandTensor::total() const {
  double s = 0.0;
  for (double v : counts_) s += v;
  return s;
}

double DemandTensor::population_total(std::size_t k) const {
  double s = 0.0;
  for (std::size_t i = 0; i < n_zones_; ++i) {
    for (std::size_t j = 0; j < n_zones_; ++j) s += (*this)(i, j, k);
  }
  return s;
}

double DemandTensor::origin_total(std::size_t i) const {
  double s = 0.0;
  for (std::size_t j = 0; j < n_zones_; ++j) {
    for (std::size_t k = 0; k < n_populations_; ++k) s += (*this)(i, j, k);
  }
  return s;
}

Mode CityModel::mode(std::size_t m) const {
  if (m == kWalking) return walking_mode(defaults.walking_speed_mph);
  return modes.at(m - 1);
}

std::optional<std::size_t> CityModel::find_mode(const std::string& mode_name) const {
  if (mode_name == "walk") return kWalking;
  for (std::size_t m = 0; m < modes.size(); ++m) {
    if (modes[m].name == mode_name) return m + 1;
  }
  return std::nullopt;
}

std::int64_t ScenarioControls::vehicles(std::size_t zone, std::size_t mode) const {
  auto it = fleet.find({zone, mode});
  return it == fleet.end() ? 0 : it->second;
}

double ScenarioControls::tax_rate(std::size_t mode) const {
  auto it = tax_rates.find(mode);
  return it == tax_rates.end() ? 0.0 : it->second;
}

FareScheme ScenarioControls::fare(const CityModel& city, std::size_t mode) const {
  if (mode == kWalking) return FareScheme::per_trip(0.0);
  auto it = fare_overrides.find(mode);
  return it == fare_overrides.end() ? city.mode(mode).fare : it->second;
}

ValidationReport validate_city(const CityModel& city) {
  ValidationReport r;
  const std::size_t n = city.n_zones();
  const std::size_t k_count = city.n_populations();

  if (n == 0) r.add("no_zones", "a city needs at least one zone", "zones");
  for (std::size_t z = 0; z < n; ++z) {
    const Zone& zone = city.zones[z];
    const auto path = idx_path("zones", z);
    if (zone.id != z) {
      r.add("zone_id", "zone ids must be contiguous from 0, expected " +
                           std::to_string(z) + ", got " + std::to_string(zone.id),
            path + ".id");
    }
    if (!(zone.latitude >= -90.0 && zone.latitude <= 90.0)) {
      r.add("latitude_range", "latitude must lie in [-90, 90], got " + fmt_num(zone.latitude),
            path + ".latitude");
    }
    if (!(zone.longitude >= -180.0 && zone.longitude <= 180.0)) {
      r.add("longitude_range",
            "longitude must lie in [-180, 180], got " + fmt_num(zone.longitude),
            path + ".longitude");
    }
  }

  for (std::size_t k = 0; k < k_count; ++k) {
    const Population& pop = city.populations[k];
    const auto path = idx_path("populations", k);
    if (pop.id != k) {
      r.add("population_id", "population ids must be contiguous from 0", path + ".id");
    }
    if (!finite_nonneg(pop.value_of_time)) {
      r.add("value_of_time", "value of time must be finite and >= 0", path + ".value_of_time");
    }
    if (!finite_nonneg(pop.size)) {
      r.add("population_size", "population size must be finite and >= 0", path + ".size");
    }
  }

  std::set<std::string> mode_names{"walk"};
  for (std::size_t m = 0; m < city.modes.size(); ++m) {
    const Mode& mode = city.modes[m];
    const auto path = idx_path("modes", m);
    if (mode.id != m + 1) {
      r.add("mode_id", "mode ids must be contiguous from 1 (0 is walking)", path + ".id");
    }
    if (mode.name.empty() || !mode_names.insert(mode.name).second) {
      r.add("mode_name", "mode names must be unique, non-empty and not 'walk'",
            path + ".name");
    }
    if (!(mode.speed_mph > 0.0) || !std::isfinite(mode.speed_mph)) {
      r.add("mode_speed", "speed must be positive", path + ".speed_mph");
    }
    if (!finite_nonneg(mode.fare.amount)) {
      r.add("mode_fare", "fare must be finite and >= 0", path + ".fare");
    }
    if (mode.seats_per_vehicle < 1) {
      r.add("mode_seats", "seats per vehicle must be >= 1", path + ".seats_per_vehicle");
    }
    if (!finite_nonneg(mode.emissions_g_per_vehicle_mile)) {
      r.add("mode_emissions", "emissions rate must be finite and >= 0",
            path + ".emissions_g_per_vehicle_mile");
    }
    if (!finite_nonneg(mode.operating_cost_per_vehicle_hour)) {
      r.add("mode_operating_cost", "operating cost must be finite and >= 0",
            path + ".operating_cost_per_vehicle_hour");
    }
  }

  if (city.demand.n_zones() != n || city.demand.n_populations() != k_count) {
    r.add("demand_shape", "demand tensor dimensions do not match zones x populations",
          "demand");
    return r;
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t k = 0; k < k_count; ++k) {
        const double d = city.demand(i, j, k);
        const std::string where = "i=" + std::to_string(i) + ", j=" + std::to_string(j) +
                                  ", k=" + std::to_string(k);
        if (!finite_nonneg(d)) {
          r.add("demand_value", "demand must be finite and >= 0 (" + where + ")", "demand");
        } else if (i == j && d > 0.0) {
          r.add("intra_zone_demand", "intra-zone demand (" + where + ")", "demand", d);
        }
      }
    }
  }
  for (std::size_t k = 0; k < k_count; ++k) {
    const double total = city.demand.population_total(k);
    const double size = city.populations[k].size;
    if (std::abs(total - size) > 1e-9 * std::max(1.0, std::abs(size))) {
      r.add("population_demand_mismatch",
            "population/demand mismatch, k=" + std::to_string(k) + ", " + fmt_num(size) +
                "≠" + fmt_num(total),
            idx_path("populations", k) + ".size", size - total);
    }
  }

  for (std::size_t o = 0; o < city.travel_time_overrides.size(); ++o) {
    const auto& ov = city.travel_time_overrides[o];
    const auto path = idx_path("travel_time_overrides", o);
    if (ov.origin >= n || ov.destination >= n) {
      r.add("override_zone", "override references an unknown zone", path);
    }
    if (ov.mode >= city.n_modes()) {
      r.add("override_mode", "override references an unknown mode", path + ".mode");
    }
    if (!finite_nonneg(ov.hours)) {
      r.add("override_hours", "override hours must be finite and >= 0", path + ".hours");
    }
  }

  if (!(city.defaults.circuity >= 1.0) || !std::isfinite(city.defaults.circuity)) {
    r.add("circuity", "circuity must be >= 1", "defaults.circuity");
  }
  if (!(city.defaults.window_hours > 0.0) || !std::isfinite(city.defaults.window_hours)) {
    r.add("window_hours", "window must be positive", "defaults.window_hours");
  }
  if (!(city.defaults.walking_speed_mph > 0.0) ||
      !std::isfinite(city.defaults.walking_speed_mph)) {
    r.add("walking_speed", "walking speed must be positive", "defaults.walking_speed_mph");
  }
  return r;
}

ValidationReport validate_controls(const CityModel& city, const ScenarioControls& controls) {
  ValidationReport r;
  for (const auto& [key, vehicles] : controls.fleet) {
    const auto [zone, mode] = key;
    const std::string path = "fleet[zone=" + std::to_string(zone) + ",mode=" +
                             std::to_string(mode) + "]";
    if (zone >= city.n_zones()) {
      r.add("unknown_zone", "fleet references unknown zone " + std::to_string(zone), path);
    }
    if (mode == kWalking) {
      r.add("walking_fleet", "walking has no fleet", path);
    } else if (mode >= city.n_modes()) {
      r.add("unknown_mode", "fleet references unknown mode " + std::to_string(mode), path);
    }
    if (vehicles < 0) r.add("fleet_negative", "vehicle counts must be >= 0", path);
  }
  for (const auto& [mode, fare] : controls.fare_overrides) {
    const std::string path = "fare_overrides[" + std::to_string(mode) + "]";
    if (mode == kWalking) {
      r.add("walking_fare", "walking fare is fixed at 0", path);
    } else if (mode >= city.n_modes()) {
      r.add("unknown_mode", "fare override references unknown mode", path);
    }
    if (!finite_nonneg(fare.amount)) r.add("fare_negative", "fares must be >= 0", path);
  }
  for (const auto& [mode, rate] : controls.tax_rates) {
    const std::string path = "tax_rates[" + std::to_string(mode) + "]";
    if (mode >= city.n_modes()) {
      r.add("unknown_mode", "tax rate references unknown mode", path);
      continue;
    }
    if (!(rate >= 0.0 && rate <= 1.0)) {
      r.add("tax_range", "tax_rates must lie in [0,1]", path);
    }
    if (rate > 0.0 && !city.mode(mode).taxable) {
      r.add("tax_not_taxable", "mode '" + city.mode(mode).name + "' is not taxable", path);
    }
  }
  return r;
}

ValidationReport validate_instance(const GameInstance& inst) {
  ValidationReport r;
  const std::size_t n = inst.n_zones, m_count = inst.n_modes, k_count = inst.n_populations;
  if (inst.cost.size() != n * n * k_count * m_count ||
      inst.capacity.size() != n * m_count || inst.travel_time.size() != n * n * m_count ||
      inst.fare.size() != n * n * m_count || inst.distance.size() != n * n ||
      inst.population_size.size() != k_count || inst.demand.n_zones() != n ||
      inst.demand.n_populations() != k_count) {
    r.add("instance_shape", "tensor dimensions do not match the instance header");
    return r;
  }
  if (m_count == 0) r.add("no_modes", "an instance needs at least the walking mode");
  for (double c : inst.cost) {
    if (!finite_nonneg(c)) {
      r.add("cost_value", "costs must be finite and >= 0");
      break;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t m = 0; m < m_count; ++m) {
      if (inst.t(i, i, m) != 0.0) r.add("diagonal_time", "t_ii must be 0");
      const Capacity& cap = inst.cap(i, m);
      if (m == kWalking && !cap.is_unbounded()) {
        r.add("walking_capacity", "walking capacity must be unbounded");
      }
      if (!cap.is_unbounded() && !finite_nonneg(cap.value())) {
        r.add("capacity_value", "capacities must be finite and >= 0");
      }
    }
    for (std::size_t k = 0; k < k_count; ++k) {
      if (inst.d(i, i, k) != 0.0) r.add("intra_zone_demand", "d_iik must be 0");
    }
  }
  for (double d : inst.demand.raw()) {
    if (!finite_nonneg(d)) {
      r.add("demand_value", "demand must be finite and >= 0");
      break;
    }
  }
  return r;
}

GameInstance GameInstance::zeros(std::size_t n_zones, std::size_t n_modes,
                                 std::size_t n_populations) {
  GameInstance inst;
  inst.n_zones = n_zones;
  inst.n_modes = n_modes;
  inst.n_populations = n_populations;
  inst.cost.assign(n_zones * n_zones * n_populations * n_modes, 0.0);
  inst.demand = DemandTensor(n_zones, n_populations);
  inst.population_size.assign(n_populations, 0.0);
  inst.capacity.assign(n_zones * n_modes, Capacity::unbounded());
  inst.travel_time.assign(n_zones * n_zones * n_modes, 0.0);
  inst.fare.assign(n_zones * n_zones * n_modes, 0.0);
  inst.distance.assign(n_zones * n_zones, 0.0);
  return inst;
}

GameInstance build_instance(const CityModel& city, const ScenarioControls& controls) {
  if (auto r = validate_city(city); !r.ok()) {
    throw ValidationError("invalid city", std::move(r));
  }
  if (auto r = validate_controls(city, controls); !r.ok()) {
    throw ValidationError("invalid scenario controls", std::move(r));
  }

  const std::size_t n = city.n_zones();
  const std::size_t m_count = city.n_modes();
  const std::size_t k_count = city.n_populations();
  GameInstance inst = GameInstance::zeros(n, m_count, k_count);
  inst.window_hours = city.defaults.window_hours;
  inst.demand = city.demand;
  for (std::size_t k = 0; k < k_count; ++k) inst.population_size[k] = city.populations[k].size;

  const DistanceMatrix dist = compute_distance(city.zones, city.defaults.circuity);
  inst.distance = dist.raw();

  for (std::size_t m = 0; m < m_count; ++m) {
    const Mode mode = city.mode(m);
    const FareScheme fare = controls.fare(city, m);
    const std::vector<double> hours =
        compute_travel_time(dist, mode, city.travel_time_overrides);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (i == j) continue;
        const double p = fare.resolve(dist(i, j));
        const double t = hours[i * n + j];
        inst.fare[inst.trip_index(i, j, m)] = p;
        inst.travel_time[inst.trip_index(i, j, m)] = t;
        for (std::size_t k = 0; k < k_count; ++k) {
          inst.cost[inst.cost_index(i, j, k, m)] =
              trip_cost(p, city.populations[k].value_of_time, t);
        }
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      inst.capacity[inst.capacity_index(i, m)] =
          m == kWalking ? Capacity::unbounded()
                        : Capacity::seats(static_cast<double>(controls.vehicles(i, m)) *
                                          mode.seats_per_vehicle);
    }
  }
  return inst;
}

}  // namespace mobeq
