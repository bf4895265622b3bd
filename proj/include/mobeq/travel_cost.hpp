#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "mobeq/model.hpp"

namespace mobeq {

/// Mean Earth radius in statute miles.
inline constexpr double kEarthRadiusMiles = 3958.7613;

/// Square matrix of inter-zone distances in miles.
class DistanceMatrix {
 public:
  DistanceMatrix() = default;
  explicit DistanceMatrix(std::size_t n) : n_(n), miles_(n * n, 0.0) {}

  std::size_t size() const { return n_; }
  double operator()(std::size_t i, std::size_t j) const { return miles_[i * n_ + j]; }
  double& operator()(std::size_t i, std::size_t j) { return miles_[i * n_ + j]; }
  const std::vector<double>& raw() const { return miles_; }

 private:
  std::size_t n_ = 0;
  std::vector<double> miles_;
};

double great_circle_miles(double lat1, double lon1, double lat2, double lon2);

/// Centroid-to-centroid great-circle distance scaled by a circuity factor.
DistanceMatrix compute_distance(std::span<const Zone> zones,
                                double circuity = kDefaultCircuity);

/// t_ij^m in hours for one mode. Overrides for this mode replace dist/speed,
/// except on the diagonal, which is always zero.
/// Throws std::invalid_argument on a non-positive speed or negative override.
std::vector<double> compute_travel_time(const DistanceMatrix& dist,
                                        const Mode& mode,
                                        std::span<const TravelTimeOverride> overrides);

/// Per-traveler cost: fare plus value of time times travel time.
double trip_cost(double fare_usd, double value_of_time_usd_per_h, double hours);

}  // namespace mobeq
