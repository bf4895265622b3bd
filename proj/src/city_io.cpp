#include "mobeq/city_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <limits>
#include <set>
#include <sstream>

#ifndef MOBEQ_SOURCE_DATA_DIR
#define MOBEQ_SOURCE_DATA_DIR "data"
#endif

namespace mobeq {

const char* to_string(FormatErrorKind kind) {
  switch (kind) {
    case FormatErrorKind::syntax: return "syntax";
    case FormatErrorKind::schema: return "schema";
    case FormatErrorKind::semantic: return "semantic";
    case FormatErrorKind::version: return "version";
  }
  return "unknown";
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Collects schema violations while walking a document.
class Reader {
 public:
  ValidationReport report;

  bool object(const Json& j, const std::string& path,
              std::initializer_list<std::string_view> required,
              std::initializer_list<std::string_view> optional = {}) {
    if (!j.is_object()) {
      fail(path, "expected an object");
      return false;
    }
    for (const auto& [key, value] : j.items()) {
      const bool known =
          std::find(required.begin(), required.end(), key) != required.end() ||
          std::find(optional.begin(), optional.end(), key) != optional.end();
      if (!known) fail(join(path, key), "unknown key '" + key + "'", "unknown_key");
    }
    bool ok = true;
    for (auto key : required) {
      if (!j.contains(std::string(key))) {
        fail(join(path, std::string(key)), "missing required key", "missing_key");
        ok = false;
      }
    }
    return ok;
  }

  const Json* field(const Json& j, const std::string& key) const {
    if (!j.is_object()) return nullptr;
    auto it = j.find(key);
    return it == j.end() ? nullptr : &*it;
  }

  double number(const Json& j, const std::string& key, const std::string& path,
                double fallback = 0.0, double lo = -kInf, double hi = kInf) {
    const Json* v = field(j, key);
    if (!v) return fallback;
    if (!v->is_number()) {
      fail(join(path, key), "expected a number");
      return fallback;
    }
    const double x = v->get<double>();
    if (!(x >= lo && x <= hi)) {
      fail(join(path, key), "must lie in " + range(lo, hi) + ", got " + num(x), "out_of_range");
    }
    return x;
  }

  std::int64_t integer(const Json& j, const std::string& key, const std::string& path,
                       std::int64_t fallback = 0, std::int64_t lo = 0) {
    const Json* v = field(j, key);
    if (!v) return fallback;
    if (!v->is_number_integer()) {
      fail(join(path, key), "expected an integer");
      return fallback;
    }
    const auto x = v->get<std::int64_t>();
    if (x < lo) fail(join(path, key), "must be >= " + std::to_string(lo), "out_of_range");
    return x;
  }

  std::string string(const Json& j, const std::string& key, const std::string& path,
                     std::string fallback = {}) {
    const Json* v = field(j, key);
    if (!v) return fallback;
    if (!v->is_string()) {
      fail(join(path, key), "expected a string");
      return fallback;
    }
    return v->get<std::string>();
  }

  bool boolean(const Json& j, const std::string& key, const std::string& path,
               bool fallback = false) {
    const Json* v = field(j, key);
    if (!v) return fallback;
    if (!v->is_boolean()) {
      fail(join(path, key), "expected true or false");
      return fallback;
    }
    return v->get<bool>();
  }

  const Json* array(const Json& j, const std::string& key, const std::string& path) {
    const Json* v = field(j, key);
    if (!v) return nullptr;
    if (!v->is_array()) {
      fail(join(path, key), "expected an array");
      return nullptr;
    }
    return v;
  }

  FareScheme fare(const Json& j, const std::string& path) {
    if (!j.is_object() || j.size() != 1) {
      fail(path, "expected exactly one of {\"per_trip\": usd} or {\"per_mile\": usd}");
      return {};
    }
    const auto& [key, value] = *j.items().begin();
    if (key != "per_trip" && key != "per_mile") {
      fail(join(path, key), "unknown fare scheme '" + key + "'", "unknown_key");
      return {};
    }
    const double amount = number(j, key, path, 0.0, 0.0);
    return key == "per_trip" ? FareScheme::per_trip(amount) : FareScheme::per_mile(amount);
  }

  std::size_t mode_ref(const Json& j, const std::string& key, const std::string& path,
                       const CityModel& city) {
    const std::string name = string(j, key, path);
    if (name.empty()) return 0;
    auto m = city.find_mode(name);
    if (!m) {
      fail(join(path, key), "unknown mode '" + name + "'", "unknown_mode");
      return 0;
    }
    return *m;
  }

  void fail(const std::string& path, const std::string& message,
            std::string code = "schema") {
    report.add(std::move(code), message, path);
  }

  void throw_if_failed(const std::string& what) const {
    if (!report.ok()) {
      throw FormatError(FormatErrorKind::schema, what + ":\n" + report.to_string(), report);
    }
  }

  static std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
  }
  static std::string at(const std::string& path, std::size_t i) {
    return path + "[" + std::to_string(i) + "]";
  }

 private:
  static std::string num(double x) {
    std::ostringstream os;
    os << x;
    return os.str();
  }
  static std::string range(double lo, double hi) {
    return "[" + (std::isinf(lo) ? std::string("-inf") : num(lo)) + ", " +
           (std::isinf(hi) ? std::string("inf") : num(hi)) + "]";
  }
};

void check_version(const Json& doc, const std::string& what) {
  auto it = doc.find("schema_version");
  if (it == doc.end() || !it->is_string()) {
    throw FormatError(FormatErrorKind::schema, what + ": missing schema_version");
  }
  const auto v = it->get<std::string>();
  if (v != kSchemaVersion) {
    throw FormatError(FormatErrorKind::version, what + ": unsupported schema_version \"" + v +
                                                    "\" (expected \"" +
                                                    std::string(kSchemaVersion) + "\")");
  }
}

// Documented defaults for the standard mode names.
struct ModeDefaults {
  int seats;
  double emissions;
  double operating_cost;
};

std::optional<ModeDefaults> standard_mode_defaults(const std::string& name) {
  if (name == "bus") return ModeDefaults{50, 2800.0, 90.0};
  if (name == "amod") return ModeDefaults{4, 350.0, 12.0};
  if (name == "bike") return ModeDefaults{1, 0.0, 0.5};
  return std::nullopt;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError(FormatErrorKind::syntax, "cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

Json number_or_null(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

double number_from(const Json& j) {
  if (j.is_null()) return kInf;
  if (!j.is_number()) throw FormatError(FormatErrorKind::schema, "expected a number");
  return j.get<double>();
}

Json per_mode(const std::vector<double>& values, const CityModel& city) {
  Json out = Json::object();
  for (std::size_t m = 0; m < values.size(); ++m) out[city.mode(m).name] = values[m];
  return out;
}

std::vector<double> per_mode_from(const Json& j, const CityModel& city) {
  std::vector<double> out(city.n_modes(), 0.0);
  for (std::size_t m = 0; m < city.n_modes(); ++m) {
    out[m] = number_from(j.at(city.mode(m).name));
  }
  return out;
}

std::string csv_number(double x) {
  std::ostringstream os;
  os << std::setprecision(10) << x;
  return os.str();
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace

Json parse_document(std::string_view text) {
  try {
    return Json::parse(text.begin(), text.end(), nullptr, true, /*ignore_comments=*/true);
  } catch (const Json::parse_error& e) {
    throw FormatError(FormatErrorKind::syntax, e.what());
  }
}

Json read_document(const std::filesystem::path& path) {
  try {
    return parse_document(read_file(path));
  } catch (const FormatError& e) {
    throw FormatError(e.kind(), path.string() + ": " + e.what(), e.report());
  }
}

CityModel city_from_json(const Json& doc) {
  if (!doc.is_object()) throw FormatError(FormatErrorKind::schema, "city: expected an object");
  check_version(doc, "city");
  Reader rd;
  rd.object(doc, "",
            {"schema_version", "name", "zones", "populations", "modes", "demand"},
            {"description", "travel_time_overrides", "defaults"});

  CityModel city;
  city.schema_version = rd.string(doc, "schema_version", "");
  city.name = rd.string(doc, "name", "");
  city.description = rd.string(doc, "description", "");

  if (const Json* d = rd.field(doc, "defaults")) {
    if (rd.object(*d, "defaults", {}, {"circuity", "window_hours", "walking_speed_mph"})) {
      city.defaults.circuity = rd.number(*d, "circuity", "defaults", kDefaultCircuity, 1.0);
      city.defaults.window_hours = rd.number(*d, "window_hours", "defaults", kDefaultWindowHours);
      city.defaults.walking_speed_mph =
          rd.number(*d, "walking_speed_mph", "defaults", kDefaultWalkingSpeedMph);
    }
  }

  if (const Json* zones = rd.array(doc, "zones", "")) {
    for (std::size_t z = 0; z < zones->size(); ++z) {
      const Json& e = (*zones)[z];
      const auto path = Reader::at("zones", z);
      if (!rd.object(e, path, {"id", "name", "latitude", "longitude"})) continue;
      Zone zone;
      zone.id = static_cast<std::size_t>(rd.integer(e, "id", path));
      zone.name = rd.string(e, "name", path);
      zone.latitude = rd.number(e, "latitude", path, 0.0, -90.0, 90.0);
      zone.longitude = rd.number(e, "longitude", path, 0.0, -180.0, 180.0);
      city.zones.push_back(std::move(zone));
    }
  }

  if (const Json* pops = rd.array(doc, "populations", "")) {
    for (std::size_t k = 0; k < pops->size(); ++k) {
      const Json& e = (*pops)[k];
      const auto path = Reader::at("populations", k);
      if (!rd.object(e, path, {"id", "name", "value_of_time", "size"})) continue;
      Population pop;
      pop.id = static_cast<std::size_t>(rd.integer(e, "id", path));
      pop.name = rd.string(e, "name", path);
      pop.value_of_time = rd.number(e, "value_of_time", path, 0.0, 0.0);
      pop.size = rd.number(e, "size", path, 0.0, 0.0);
      city.populations.push_back(std::move(pop));
    }
  }

  if (const Json* modes = rd.array(doc, "modes", "")) {
    for (std::size_t m = 0; m < modes->size(); ++m) {
      const Json& e = (*modes)[m];
      const auto path = Reader::at("modes", m);
      if (!rd.object(e, path, {"id", "name", "speed_mph", "fare"},
                     {"seats_per_vehicle", "emissions_g_per_vehicle_mile",
                      "operating_cost_per_vehicle_hour", "taxable"})) {
        continue;
      }
      Mode mode;
      mode.id = static_cast<std::size_t>(rd.integer(e, "id", path, 0, 1));
      mode.name = rd.string(e, "name", path);
      mode.speed_mph = rd.number(e, "speed_mph", path, 0.0);
      mode.fare = rd.fare(e.at("fare"), Reader::join(path, "fare"));
      const auto defaults = standard_mode_defaults(mode.name);
      for (const char* key : {"seats_per_vehicle", "emissions_g_per_vehicle_mile",
                              "operating_cost_per_vehicle_hour"}) {
        if (!defaults && !e.contains(key)) {
          rd.fail(Reader::join(path, key),
                  "required for mode '" + mode.name + "' (no documented default)",
                  "missing_key");
        }
      }
      const ModeDefaults dflt = defaults.value_or(ModeDefaults{1, 0.0, 0.0});
      mode.seats_per_vehicle =
          static_cast<int>(rd.integer(e, "seats_per_vehicle", path, dflt.seats, 1));
      mode.emissions_g_per_vehicle_mile =
          rd.number(e, "emissions_g_per_vehicle_mile", path, dflt.emissions, 0.0);
      mode.operating_cost_per_vehicle_hour =
          rd.number(e, "operating_cost_per_vehicle_hour", path, dflt.operating_cost, 0.0);
      mode.taxable = rd.boolean(e, "taxable", path, false);
      city.modes.push_back(std::move(mode));
    }
  }
  rd.throw_if_failed("city");

  const std::size_t n = city.n_zones(), k_count = city.n_populations();
  city.demand = DemandTensor(n, k_count);
  ValidationReport semantic;
  if (const Json* demand = rd.array(doc, "demand", "")) {
    std::set<std::tuple<std::int64_t, std::int64_t, std::int64_t>> seen;
    for (std::size_t r = 0; r < demand->size(); ++r) {
      const Json& e = (*demand)[r];
      const auto path = Reader::at("demand", r);
      if (!rd.object(e, path, {"origin", "destination", "population", "count"})) continue;
      const auto i = rd.integer(e, "origin", path);
      const auto j = rd.integer(e, "destination", path);
      const auto k = rd.integer(e, "population", path);
      const double count = rd.number(e, "count", path, 0.0, 0.0);
      if (i >= static_cast<std::int64_t>(n) || j >= static_cast<std::int64_t>(n)) {
        semantic.add("unknown_zone",
                     "demand references zone " + std::to_string(std::max(i, j)) +
                         " but the city has " + std::to_string(n) + " zones",
                     path);
        continue;
      }
      if (k >= static_cast<std::int64_t>(k_count)) {
        semantic.add("unknown_population", "unknown population " + std::to_string(k),
                     path + ".population");
        continue;
      }
      if (!seen.insert({i, j, k}).second) {
        rd.fail(path, "duplicate demand entry", "duplicate_entry");
        continue;
      }
      city.demand(static_cast<std::size_t>(i), static_cast<std::size_t>(j),
                  static_cast<std::size_t>(k)) = count;
    }
  }

  if (const Json* overrides = rd.array(doc, "travel_time_overrides", "")) {
    for (std::size_t r = 0; r < overrides->size(); ++r) {
      const Json& e = (*overrides)[r];
      const auto path = Reader::at("travel_time_overrides", r);
      if (!rd.object(e, path, {"origin", "destination", "mode", "hours"})) continue;
      TravelTimeOverride ov;
      ov.origin = static_cast<std::size_t>(rd.integer(e, "origin", path));
      ov.destination = static_cast<std::size_t>(rd.integer(e, "destination", path));
      ov.mode = rd.mode_ref(e, "mode", path, city);
      ov.hours = rd.number(e, "hours", path, 0.0, 0.0);
      if (ov.origin >= n || ov.destination >= n) {
        semantic.add("unknown_zone", "override references an unknown zone", path);
      }
      city.travel_time_overrides.push_back(ov);
    }
  }
  rd.throw_if_failed("city");

  if (semantic.ok()) semantic = validate_city(city);
  if (!semantic.ok()) {
    throw FormatError(FormatErrorKind::semantic, "city:\n" + semantic.to_string(),
                      std::move(semantic));
  }
  return city;
}

Json city_to_json(const CityModel& city) {
  Json doc;
  doc["schema_version"] = city.schema_version;
  doc["name"] = city.name;
  if (!city.description.empty()) doc["description"] = city.description;
  doc["defaults"] = {{"circuity", city.defaults.circuity},
                     {"window_hours", city.defaults.window_hours},
                     {"walking_speed_mph", city.defaults.walking_speed_mph}};
  doc["zones"] = Json::array();
  for (const auto& z : city.zones) {
    doc["zones"].push_back(
        {{"id", z.id}, {"name", z.name}, {"latitude", z.latitude}, {"longitude", z.longitude}});
  }
  doc["populations"] = Json::array();
  for (const auto& p : city.populations) {
    doc["populations"].push_back({{"id", p.id},
                                  {"name", p.name},
                                  {"value_of_time", p.value_of_time},
                                  {"size", p.size}});
  }
  doc["modes"] = Json::array();
  for (const auto& m : city.modes) {
    Json fare;
    fare[m.fare.kind == FareKind::per_trip ? "per_trip" : "per_mile"] = m.fare.amount;
    doc["modes"].push_back({{"id", m.id},
                            {"name", m.name},
                            {"speed_mph", m.speed_mph},
                            {"fare", fare},
                            {"seats_per_vehicle", m.seats_per_vehicle},
                            {"emissions_g_per_vehicle_mile", m.emissions_g_per_vehicle_mile},
                            {"operating_cost_per_vehicle_hour", m.operating_cost_per_vehicle_hour},
                            {"taxable", m.taxable}});
  }
  doc["demand"] = Json::array();
  for (std::size_t i = 0; i < city.n_zones(); ++i) {
    for (std::size_t j = 0; j < city.n_zones(); ++j) {
      for (std::size_t k = 0; k < city.n_populations(); ++k) {
        const double d = city.demand(i, j, k);
        if (d == 0.0) continue;
        doc["demand"].push_back(
            {{"origin", i}, {"destination", j}, {"population", k}, {"count", d}});
      }
    }
  }
  if (!city.travel_time_overrides.empty()) {
    doc["travel_time_overrides"] = Json::array();
    for (const auto& o : city.travel_time_overrides) {
      doc["travel_time_overrides"].push_back({{"origin", o.origin},
                                              {"destination", o.destination},
                                              {"mode", city.mode(o.mode).name},
                                              {"hours", o.hours}});
    }
  }
  return doc;
}

CityModel load_city(const std::filesystem::path& path) {
  const Json doc = read_document(path);
  try {
    return city_from_json(doc);
  } catch (const FormatError& e) {
    throw FormatError(e.kind(), path.string() + ": " + e.what(), e.report());
  }
}

CityModel load_city(std::istream& in) {
  std::ostringstream os;
  os << in.rdbuf();
  return city_from_json(parse_document(os.str()));
}

void save_city(const CityModel& city, const std::filesystem::path& path) {
  write_file(path, city_to_json(city).dump(2) + "\n");
}

ScenarioControls controls_from_json(const Json& doc, const CityModel& city) {
  Reader rd;
  if (!rd.object(doc, "", {}, {"schema_version", "fleet", "fare_overrides", "tax_rates"})) {
    rd.throw_if_failed("controls");
  }
  if (doc.contains("schema_version")) check_version(doc, "controls");

  ScenarioControls controls;
  if (const Json* fleet = rd.array(doc, "fleet", "")) {
    for (std::size_t r = 0; r < fleet->size(); ++r) {
      const Json& e = (*fleet)[r];
      const auto path = Reader::at("fleet", r);
      if (!rd.object(e, path, {"zone", "mode", "vehicles"})) continue;
      const auto zone = rd.integer(e, "zone", path);
      const std::size_t mode = rd.mode_ref(e, "mode", path, city);
      const auto vehicles = rd.integer(e, "vehicles", path, 0, 0);
      if (zone >= static_cast<std::int64_t>(city.n_zones())) {
        rd.fail(path + ".zone", "unknown zone " + std::to_string(zone), "unknown_zone");
        continue;
      }
      if (e.contains("mode") && e.at("mode") == "walk") {
        rd.fail(path + ".mode", "walking has no fleet", "walking_fleet");
        continue;
      }
      if (!controls.fleet.emplace(std::pair{static_cast<std::size_t>(zone), mode}, vehicles)
               .second) {
        rd.fail(path, "duplicate fleet entry", "duplicate_entry");
      }
    }
  }
  if (const Json* fares = rd.field(doc, "fare_overrides")) {
    if (!fares->is_object()) {
      rd.fail("fare_overrides", "expected an object keyed by mode name");
    } else {
      for (const auto& [name, value] : fares->items()) {
        const auto path = "fare_overrides." + name;
        auto m = city.find_mode(name);
        if (!m || *m == kWalking) {
          rd.fail(path, "unknown or fixed-fare mode '" + name + "'", "unknown_mode");
          continue;
        }
        controls.fare_overrides[*m] = rd.fare(value, path);
      }
    }
  }
  if (const Json* taxes = rd.field(doc, "tax_rates")) {
    if (!taxes->is_object()) {
      rd.fail("tax_rates", "expected an object keyed by mode name");
    } else {
      for (const auto& [name, value] : taxes->items()) {
        const auto path = "tax_rates." + name;
        auto m = city.find_mode(name);
        if (!m) {
          rd.fail(path, "unknown mode '" + name + "'", "unknown_mode");
          continue;
        }
        if (!value.is_number()) {
          rd.fail(path, "expected a number");
          continue;
        }
        const double rate = value.get<double>();
        if (!(rate >= 0.0 && rate <= 1.0)) {
          rd.fail(path, "tax_rates must lie in [0,1]", "tax_range");
          continue;
        }
        controls.tax_rates[*m] = rate;
      }
    }
  }
  rd.throw_if_failed("controls");
  if (auto r = validate_controls(city, controls); !r.ok()) {
    throw FormatError(FormatErrorKind::semantic, "controls: " + r.to_string(), std::move(r));
  }
  return controls;
}

Json controls_to_json(const ScenarioControls& controls, const CityModel& city) {
  Json doc;
  doc["schema_version"] = std::string(kSchemaVersion);
  doc["fleet"] = Json::array();
  for (const auto& [key, vehicles] : controls.fleet) {
    doc["fleet"].push_back(
        {{"zone", key.first}, {"mode", city.mode(key.second).name}, {"vehicles", vehicles}});
  }
  doc["fare_overrides"] = Json::object();
  for (const auto& [m, fare] : controls.fare_overrides) {
    Json f;
    f[fare.kind == FareKind::per_trip ? "per_trip" : "per_mile"] = fare.amount;
    doc["fare_overrides"][city.mode(m).name] = f;
  }
  doc["tax_rates"] = Json::object();
  for (const auto& [m, rate] : controls.tax_rates) doc["tax_rates"][city.mode(m).name] = rate;
  return doc;
}

ScenarioControls load_controls(const std::filesystem::path& path, const CityModel& city) {
  const Json doc = read_document(path);
  try {
    return controls_from_json(doc, city);
  } catch (const FormatError& e) {
    throw FormatError(e.kind(), path.string() + ": " + e.what(), e.report());
  }
}

Json kpis_to_json(const KpiBundle& kpis, const CityModel& city) {
  Json doc;
  doc["travelers"] = kpis.travelers;
  doc["avg_travel_time_min"] = kpis.avg_travel_time_min;
  doc["co2_kg"] = kpis.co2_kg;
  doc["tax_revenue"] = kpis.tax_revenue;
  doc["revenue"] = per_mode(kpis.revenue, city);
  doc["operating_cost"] = per_mode(kpis.operating_cost, city);
  doc["co2_by_mode"] = per_mode(kpis.co2_by_mode, city);
  doc["zones"] = Json::array();
  for (std::size_t i = 0; i < kpis.n_zones; ++i) {
    const auto row = [&](const std::vector<double>& table) {
      Json out = Json::object();
      for (std::size_t m = 0; m < kpis.n_modes; ++m) {
        out[city.mode(m).name] = table[i * kpis.n_modes + m];
      }
      return out;
    };
    doc["zones"].push_back({{"zone", i},
                            {"name", city.zones.at(i).name},
                            {"mode_share", row(kpis.mode_share)},
                            {"riders", row(kpis.riders)},
                            {"revenue", row(kpis.zone_revenue)}});
  }
  return doc;
}

KpiBundle kpis_from_json(const Json& doc, const CityModel& city) {
  try {
    KpiBundle k;
    k.n_zones = city.n_zones();
    k.n_modes = city.n_modes();
    k.travelers = doc.at("travelers").get<double>();
    k.avg_travel_time_min = doc.at("avg_travel_time_min").get<double>();
    k.co2_kg = doc.at("co2_kg").get<double>();
    k.tax_revenue = doc.at("tax_revenue").get<double>();
    k.revenue = per_mode_from(doc.at("revenue"), city);
    k.operating_cost = per_mode_from(doc.at("operating_cost"), city);
    k.co2_by_mode = per_mode_from(doc.at("co2_by_mode"), city);
    const Json& zones = doc.at("zones");
    if (zones.size() != k.n_zones) throw FormatError(FormatErrorKind::schema, "zone count");
    k.mode_share.assign(k.n_zones * k.n_modes, 0.0);
    k.riders = k.mode_share;
    k.zone_revenue = k.mode_share;
    for (std::size_t i = 0; i < k.n_zones; ++i) {
      const auto share = per_mode_from(zones[i].at("mode_share"), city);
      const auto riders = per_mode_from(zones[i].at("riders"), city);
      const auto revenue = per_mode_from(zones[i].at("revenue"), city);
      std::copy(share.begin(), share.end(), k.mode_share.begin() + i * k.n_modes);
      std::copy(riders.begin(), riders.end(), k.riders.begin() + i * k.n_modes);
      std::copy(revenue.begin(), revenue.end(), k.zone_revenue.begin() + i * k.n_modes);
    }
    return k;
  } catch (const Json::exception& e) {
    throw FormatError(FormatErrorKind::schema, std::string("kpis: ") + e.what());
  }
}

Json kpi_delta_to_json(const IterationDiff& diff, const CityModel& city) {
  const KpiDelta& d = diff.delta;
  const std::size_t m_count = city.n_modes();
  Json doc;
  doc["a"] = diff.a;
  doc["b"] = diff.b;
  doc["avg_travel_time_min"] = d.avg_travel_time_min;
  doc["co2_kg"] = d.co2_kg;
  doc["tax_revenue"] = d.tax_revenue;
  doc["revenue"] = per_mode(d.revenue, city);
  doc["operating_cost"] = per_mode(d.operating_cost, city);
  doc["zones"] = Json::array();
  for (std::size_t i = 0; i < city.n_zones(); ++i) {
    Json share = Json::object(), riders = Json::object();
    for (std::size_t m = 0; m < m_count; ++m) {
      share[city.mode(m).name] = d.mode_share[i * m_count + m];
      riders[city.mode(m).name] = d.riders[i * m_count + m];
    }
    doc["zones"].push_back({{"zone", i},
                            {"name", city.zones[i].name},
                            {"mode_share", share},
                            {"riders", riders}});
  }
  return doc;
}

Json nash_to_json(const NashCertificate& cert, const CityModel& city) {
  Json doc;
  doc["verdict"] = cert.verdict;
  doc["witnesses"] = Json::array();
  for (const auto& w : cert.witnesses) {
    doc["witnesses"].push_back({{"origin", w.origin},
                                {"destination", w.destination},
                                {"population", w.population},
                                {"mode", city.mode(w.mode).name},
                                {"alternative", city.mode(w.alternative).name},
                                {"cost", w.cost},
                                {"alternative_cost", w.alternative_cost},
                                {"alternative_slack", number_or_null(w.alternative_slack)}});
  }
  return doc;
}

Json stats_to_json(const SolveStats& stats) {
  return {{"objective", stats.objective},
          {"solver", to_string(stats.solver_kind)},
          {"per_zone_iterations", stats.per_zone_iterations},
          {"wall_time_ms",
           std::chrono::duration<double, std::milli>(stats.wall_time).count()}};
}

Json report_to_json(const EquilibriumReport& report, const CityModel& city,
                    const ReportJsonOptions& options) {
  Json doc;
  doc["iteration"] = report.iteration;
  doc["timestamp"] = report.timestamp;
  doc["controls"] = controls_to_json(report.controls, city);
  doc["kpis"] = kpis_to_json(report.kpis, city);
  if (options.full_witnesses) {
    doc["nash"] = nash_to_json(report.nash, city);
  } else {
    doc["nash"] = {{"verdict", report.nash.verdict},
                   {"witness_count", report.nash.witnesses.size()}};
  }
  doc["stats"] = stats_to_json(report.stats);
  if (options.include_configuration) {
    const Configuration& cfg = report.configuration;
    Json sparse = Json::array();
    for (std::size_t i = 0; i < cfg.n_zones; ++i) {
      for (std::size_t j = 0; j < cfg.n_zones; ++j) {
        for (std::size_t k = 0; k < cfg.n_populations; ++k) {
          for (std::size_t m = 0; m < cfg.n_modes; ++m) {
            const double v = cfg(i, j, k, m);
            if (v > 1e-9) sparse.push_back({i, j, k, m, v});
          }
        }
      }
    }
    doc["configuration"] = std::move(sparse);
  }
  return doc;
}

EquilibriumReport report_from_json(const Json& doc, const CityModel& city) {
  try {
    EquilibriumReport r;
    r.iteration = doc.at("iteration").get<std::size_t>();
    r.timestamp = doc.at("timestamp").get<std::string>();
    r.controls = controls_from_json(doc.at("controls"), city);
    r.kpis = kpis_from_json(doc.at("kpis"), city);

    const Json& nash = doc.at("nash");
    r.nash.verdict = nash.at("verdict").get<bool>();
    for (const auto& w : nash.at("witnesses")) {
      r.nash.witnesses.push_back(
          {w.at("origin").get<std::size_t>(), w.at("destination").get<std::size_t>(),
           w.at("population").get<std::size_t>(),
           city.find_mode(w.at("mode").get<std::string>()).value_or(0),
           city.find_mode(w.at("alternative").get<std::string>()).value_or(0),
           w.at("cost").get<double>(), w.at("alternative_cost").get<double>(),
           number_from(w.at("alternative_slack"))});
    }

    const Json& stats = doc.at("stats");
    r.stats.objective = stats.at("objective").get<double>();
    r.stats.solver_kind =
        stats.at("solver") == "oracle" ? SolverKind::oracle : SolverKind::decomposed;
    r.stats.per_zone_iterations = stats.at("per_zone_iterations").get<std::vector<std::size_t>>();
    r.stats.wall_time = std::chrono::nanoseconds(
        static_cast<std::int64_t>(stats.at("wall_time_ms").get<double>() * 1e6));

    Configuration& cfg = r.configuration;
    cfg.n_zones = city.n_zones();
    cfg.n_modes = city.n_modes();
    cfg.n_populations = city.n_populations();
    cfg.x.assign(cfg.n_zones * cfg.n_zones * cfg.n_populations * cfg.n_modes, 0.0);
    if (doc.contains("configuration")) {
      for (const auto& e : doc.at("configuration")) {
        const auto i = e.at(0).get<std::size_t>(), j = e.at(1).get<std::size_t>(),
                   k = e.at(2).get<std::size_t>(), m = e.at(3).get<std::size_t>();
        if (i >= cfg.n_zones || j >= cfg.n_zones || k >= cfg.n_populations ||
            m >= cfg.n_modes) {
          throw FormatError(FormatErrorKind::schema, "configuration index out of range");
        }
        cfg(i, j, k, m) = e.at(4).get<double>();
      }
    }
    return r;
  } catch (const Json::exception& e) {
    throw FormatError(FormatErrorKind::schema, std::string("report: ") + e.what());
  }
}

std::string report_to_csv(const EquilibriumReport& report, const CityModel& city) {
  const KpiBundle& k = report.kpis;
  std::ostringstream os;
  os << "zone,mode,share,riders,revenue\n";
  for (std::size_t i = 0; i < k.n_zones; ++i) {
    for (std::size_t m = 0; m < k.n_modes; ++m) {
      os << csv_field(city.zones[i].name) << ',' << csv_field(city.mode(m).name) << ','
         << csv_number(k.share(i, m)) << ',' << csv_number(k.riders_at(i, m)) << ','
         << csv_number(k.zone_revenue[i * k.n_modes + m]) << '\n';
    }
  }
  os << "\nkpi,value\n";
  os << "travelers," << csv_number(k.travelers) << '\n';
  os << "avg_travel_time_min," << csv_number(k.avg_travel_time_min) << '\n';
  os << "co2_kg," << csv_number(k.co2_kg) << '\n';
  os << "tax_revenue," << csv_number(k.tax_revenue) << '\n';
  for (std::size_t m = 0; m < k.n_modes; ++m) {
    os << "revenue_" << city.mode(m).name << ',' << csv_number(k.revenue[m]) << '\n';
  }
  for (std::size_t m = 0; m < k.n_modes; ++m) {
    os << "operating_cost_" << city.mode(m).name << ',' << csv_number(k.operating_cost[m])
       << '\n';
  }
  os << "objective," << csv_number(report.stats.objective) << '\n';
  os << "nash_verdict," << (report.nash.verdict ? "true" : "false") << '\n';
  return os.str();
}

std::string diff_to_csv(const IterationDiff& diff, const CityModel& city) {
  const KpiDelta& d = diff.delta;
  std::ostringstream os;
  os << "kpi,delta\n";
  os << "avg_travel_time_min," << csv_number(d.avg_travel_time_min) << '\n';
  os << "co2_kg," << csv_number(d.co2_kg) << '\n';
  os << "tax_revenue," << csv_number(d.tax_revenue) << '\n';
  for (std::size_t m = 0; m < d.revenue.size(); ++m) {
    os << "revenue_" << city.mode(m).name << ',' << csv_number(d.revenue[m]) << '\n';
  }
  for (std::size_t m = 0; m < d.operating_cost.size(); ++m) {
    os << "operating_cost_" << city.mode(m).name << ',' << csv_number(d.operating_cost[m])
       << '\n';
  }
  const std::size_t m_count = city.n_modes();
  for (std::size_t i = 0; i < city.n_zones(); ++i) {
    for (std::size_t m = 0; m < m_count; ++m) {
      os << "share_" << csv_field(city.zones[i].name + "_" + city.mode(m).name) << ','
         << csv_number(d.mode_share[i * m_count + m]) << '\n';
    }
  }
  return os.str();
}

Json session_to_json(const Session& session) {
  Json doc;
  doc["schema_version"] = std::string(kSchemaVersion);
  doc["kind"] = "session";
  doc["id"] = session.id();
  doc["city"] = city_to_json(session.city());
  doc["history"] = Json::array();
  for (const auto& report : session.history()) {
    doc["history"].push_back(report_to_json(report, session.city()));
  }
  return doc;
}

Session session_from_json(const Json& doc) {
  if (!doc.is_object()) throw FormatError(FormatErrorKind::schema, "session: expected an object");
  check_version(doc, "session");
  Reader rd;
  rd.object(doc, "", {"schema_version", "kind", "id", "city", "history"});
  rd.throw_if_failed("session");
  if (doc.at("kind") != "session") {
    throw FormatError(FormatErrorKind::schema, "session: kind must be \"session\"");
  }
  CityModel city = city_from_json(doc.at("city"));
  std::vector<EquilibriumReport> history;
  if (!doc.at("history").is_array()) {
    throw FormatError(FormatErrorKind::schema, "session: history must be an array");
  }
  for (const auto& r : doc.at("history")) history.push_back(report_from_json(r, city));
  try {
    return Session(doc.at("id").get<std::string>(), std::move(city), std::move(history));
  } catch (const std::invalid_argument& e) {
    throw FormatError(FormatErrorKind::schema, std::string("session: ") + e.what());
  }
}

void save_session(const Session& session, const std::filesystem::path& path) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  write_file(tmp, session_to_json(session).dump(1) + "\n");
  std::filesystem::rename(tmp, path);
}

Session load_session(const std::filesystem::path& path) {
  const Json doc = read_document(path);
  try {
    return session_from_json(doc);
  } catch (const FormatError& e) {
    throw FormatError(e.kind(), path.string() + ": " + e.what(), e.report());
  }
}

std::filesystem::path default_data_dir() {
  if (const char* env = std::getenv("MOBEQ_DATA_DIR"); env && *env) return env;
  return MOBEQ_SOURCE_DATA_DIR;
}

std::vector<NamedCity> bundled_datasets(const std::filesystem::path& data_dir) {
  std::vector<NamedCity> out;
  for (const char* id : {"boston", "lugano", "kyiv"}) {
    out.push_back({id, load_city(data_dir / (std::string(id) + ".city"))});
  }
  return out;
}

}  // namespace mobeq
