#include "mobeq/travel_cost.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

namespace mobeq {

double great_circle_miles(double lat1, double lon1, double lat2, double lon2) {
  constexpr double rad = std::numbers::pi / 180.0;
  const double phi1 = lat1 * rad;
  const double phi2 = lat2 * rad;
  const double dphi = (lat2 - lat1) * rad;
  const double dlambda = (lon2 - lon1) * rad;
  const double h = std::sin(dphi / 2) * std::sin(dphi / 2) +
                   std::cos(phi1) * std::cos(phi2) * std::sin(dlambda / 2) *
                       std::sin(dlambda / 2);
  return 2.0 * kEarthRadiusMiles * std::asin(std::min(1.0, std::sqrt(h)));
}

DistanceMatrix compute_distance(std::span<const Zone> zones, double circuity) {
  DistanceMatrix dist(zones.size());
  for (std::size_t i = 0; i < zones.size(); ++i) {
    for (std::size_t j = 0; j < zones.size(); ++j) {
      if (i == j) continue;
      dist(i, j) = circuity * great_circle_miles(zones[i].latitude, zones[i].longitude,
                                                 zones[j].latitude, zones[j].longitude);
    }
  }
  return dist;
}

std::vector<double> compute_travel_time(const DistanceMatrix& dist, const Mode& mode,
                                        std::span<const TravelTimeOverride> overrides) {
  if (!(mode.speed_mph > 0.0) || !std::isfinite(mode.speed_mph)) {
    throw std::invalid_argument("mode '" + mode.name + "' has non-positive speed");
  }
  const std::size_t n = dist.size();
  std::vector<double> hours(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i != j) hours[i * n + j] = dist(i, j) / mode.speed_mph;
    }
  }
  for (const auto& o : overrides) {
    if (o.mode != mode.id) continue;
    if (!(o.hours >= 0.0) || !std::isfinite(o.hours)) {
      throw std::invalid_argument("negative travel time override for mode '" +
                                  mode.name + "'");
    }
    if (o.origin >= n || o.destination >= n) {
      throw std::invalid_argument("travel time override references unknown zone");
    }
    if (o.origin == o.destination) continue;
    hours[o.origin * n + o.destination] = o.hours;
  }
  return hours;
}

double trip_cost(double fare_usd, double value_of_time_usd_per_h, double hours) {
  return fare_usd + value_of_time_usd_per_h * hours;
}

}  // namespace mobeq
