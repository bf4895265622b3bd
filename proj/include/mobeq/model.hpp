#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace mobeq {

/// Walking speed injected by the engine when a city does not override it.
inline constexpr double kDefaultWalkingSpeedMph = 3.1;
inline constexpr double kDefaultCircuity = 1.3;
inline constexpr double kDefaultWindowHours = 1.0;

/// Mode index reserved for walking.
inline constexpr std::size_t kWalking = 0;

struct Violation {
  std::string code;
  std::string message;
  std::string path;  // field path, e.g. "zones[3].latitude"; may be empty
  double residual = 0.0;
};

/// A list of violated invariants. Empty means valid.
struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
  void add(std::string code, std::string message, std::string path = {},
           double residual = 0.0) {
    violations.push_back({std::move(code), std::move(message), std::move(path),
                          residual});
  }
  bool has(const std::string& code) const;
  std::string to_string() const;
};

/// Input rejected by a validation step; carries the full report.
class ValidationError : public std::runtime_error {
 public:
  ValidationError(const std::string& what, ValidationReport report)
      : std::runtime_error(what), report_(std::move(report)) {}
  const ValidationReport& report() const { return report_; }

 private:
  ValidationReport report_;
};

class PreconditionError : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

struct Zone {
  std::size_t id = 0;
  std::string name;
  double latitude = 0.0;
  double longitude = 0.0;
};

struct Population {
  std::size_t id = 0;
  std::string name;
  double value_of_time = 0.0;  // USD per hour
  double size = 0.0;           // travelers per window
};

enum class FareKind { per_trip, per_mile };

struct FareScheme {
  FareKind kind = FareKind::per_trip;
  double amount = 0.0;  // USD per trip, or USD per mile

  static FareScheme per_trip(double usd) { return {FareKind::per_trip, usd}; }
  static FareScheme per_mile(double usd) { return {FareKind::per_mile, usd}; }

  /// Monetary fare for a trip of the given length.
  double resolve(double miles) const {
    return kind == FareKind::per_trip ? amount : amount * miles;
  }
  bool operator==(const FareScheme&) const = default;
};

struct Mode {
  std::size_t id = 0;
  std::string name;
  double speed_mph = 0.0;
  FareScheme fare;
  int seats_per_vehicle = 1;
  double emissions_g_per_vehicle_mile = 0.0;
  double operating_cost_per_vehicle_hour = 0.0;
  bool taxable = false;
};

/// The engine-injected walking mode.
Mode walking_mode(double speed_mph = kDefaultWalkingSpeedMph);

/// Dense d_ijk storage, indexed (origin, destination, population).
class DemandTensor {
 public:
  DemandTensor() = default;
  DemandTensor(std::size_t n_zones, std::size_t n_populations)
      : n_zones_(n_zones),
        n_populations_(n_populations),
        counts_(n_zones * n_zones * n_populations, 0.0) {}

  std::size_t n_zones() const { return n_zones_; }
  std::size_t n_populations() const { return n_populations_; }

  double operator()(std::size_t i, std::size_t j, std::size_t k) const {
    return counts_[index(i, j, k)];
  }
  double& operator()(std::size_t i, std::size_t j, std::size_t k) {
    return counts_[index(i, j, k)];
  }

  const std::vector<double>& raw() const { return counts_; }

  double total() const;
  double population_total(std::size_t k) const;
  double origin_total(std::size_t i) const;

  bool operator==(const DemandTensor&) const = default;

 private:
  std::size_t index(std::size_t i, std::size_t j, std::size_t k) const {
    return (i * n_zones_ + j) * n_populations_ + k;
  }

  std::size_t n_zones_ = 0;
  std::size_t n_populations_ = 0;
  std::vector<double> counts_;
};

struct TravelTimeOverride {
  std::size_t origin = 0;
  std::size_t destination = 0;
  std::size_t mode = 0;  // engine mode index, walking = 0
  double hours = 0.0;
};

struct CityDefaults {
  double circuity = kDefaultCircuity;
  double window_hours = kDefaultWindowHours;
  double walking_speed_mph = kDefaultWalkingSpeedMph;
};

/// Static description of a city. `modes` excludes walking; mode ids run 1..M-1.
struct CityModel {
  std::string schema_version = "1";
  std::string name;
  std::string description;
  std::vector<Zone> zones;
  std::vector<Population> populations;
  std::vector<Mode> modes;
  DemandTensor demand;
  std::vector<TravelTimeOverride> travel_time_overrides;
  CityDefaults defaults;

  std::size_t n_zones() const { return zones.size(); }
  std::size_t n_populations() const { return populations.size(); }
  /// Mode count including walking.
  std::size_t n_modes() const { return modes.size() + 1; }

  /// Mode by engine index (0 = walking).
  Mode mode(std::size_t m) const;
  std::optional<std::size_t> find_mode(const std::string& name) const;
};

/// The levers a user pulls between iterations.
struct ScenarioControls {
  std::map<std::pair<std::size_t, std::size_t>, std::int64_t> fleet;  // (zone, mode) -> vehicles
  std::map<std::size_t, FareScheme> fare_overrides;
  std::map<std::size_t, double> tax_rates;

  std::int64_t vehicles(std::size_t zone, std::size_t mode) const;
  double tax_rate(std::size_t mode) const;
  /// Fare in force for a mode: override if present, else the city's default.
  FareScheme fare(const CityModel& city, std::size_t mode) const;

  bool operator==(const ScenarioControls&) const = default;
};

/// Seats per window, with an explicit unbounded state for walking.
class Capacity {
 public:
  static Capacity unbounded() { return Capacity(true, 0.0); }
  static Capacity seats(double n) { return Capacity(false, n); }

  bool is_unbounded() const { return unbounded_; }
  /// Seat count; only meaningful when bounded.
  double value() const { return seats_; }
  /// True when `load` reaches the bound within `tol`. Never true when unbounded.
  bool saturated_by(double load, double tol) const {
    return !unbounded_ && load >= seats_ - tol;
  }
  bool operator==(const Capacity&) const = default;

 private:
  Capacity(bool unbounded, double seats) : unbounded_(unbounded), seats_(seats) {}
  bool unbounded_ = true;
  double seats_ = 0.0;
};

/// Fully resolved game: costs, demands, capacities.
///
/// Tensors are stored flat. Per-traveler quantities use (i, j, k, m) order,
/// per-trip quantities (i, j, m), capacities (i, m).
struct GameInstance {
  std::size_t n_zones = 0;
  std::size_t n_modes = 0;  // including walking
  std::size_t n_populations = 0;
  double window_hours = kDefaultWindowHours;

  std::vector<double> cost;         // c_ijk^m, USD
  DemandTensor demand;              // d_ijk
  std::vector<double> population_size;  // P_k
  std::vector<Capacity> capacity;   // C_i^m
  std::vector<double> travel_time;  // t_ij^m, hours
  std::vector<double> fare;         // p_ij^m, USD
  std::vector<double> distance;     // miles, (i, j)

  /// Allocates zero-filled tensors with unbounded capacities everywhere.
  static GameInstance zeros(std::size_t n_zones, std::size_t n_modes,
                            std::size_t n_populations);

  std::size_t cost_index(std::size_t i, std::size_t j, std::size_t k,
                         std::size_t m) const {
    return ((i * n_zones + j) * n_populations + k) * n_modes + m;
  }
  std::size_t trip_index(std::size_t i, std::size_t j, std::size_t m) const {
    return (i * n_zones + j) * n_modes + m;
  }
  std::size_t capacity_index(std::size_t i, std::size_t m) const {
    return i * n_modes + m;
  }

  double c(std::size_t i, std::size_t j, std::size_t k, std::size_t m) const {
    return cost[cost_index(i, j, k, m)];
  }
  double d(std::size_t i, std::size_t j, std::size_t k) const {
    return demand(i, j, k);
  }
  const Capacity& cap(std::size_t i, std::size_t m) const {
    return capacity[capacity_index(i, m)];
  }
  double t(std::size_t i, std::size_t j, std::size_t m) const {
    return travel_time[trip_index(i, j, m)];
  }
  double p(std::size_t i, std::size_t j, std::size_t m) const {
    return fare[trip_index(i, j, m)];
  }
  double dist(std::size_t i, std::size_t j) const {
    return distance[i * n_zones + j];
  }

  /// Number of LP variables before zero-demand triples are dropped.
  std::size_t full_variable_count() const {
    return n_zones * n_zones * n_modes * n_populations;
  }

  bool operator==(const GameInstance&) const = default;
};

ValidationReport validate_city(const CityModel& city);
ValidationReport validate_controls(const CityModel& city,
                                   const ScenarioControls& controls);
ValidationReport validate_instance(const GameInstance& inst);

/// Resolves a city and its controls into a game instance.
/// Throws ValidationError if either input is invalid.
GameInstance build_instance(const CityModel& city,
                            const ScenarioControls& controls);

}  // namespace mobeq
