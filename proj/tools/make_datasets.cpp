// Regenerates the bundled datasets under data/ and checks the Boston golden cases.
//
//   make_datasets [data-dir]

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "mobeq/city_io.hpp"
#include "mobeq/session.hpp"

namespace fs = std::filesystem;
using namespace mobeq;

namespace {

constexpr const char* kHeader =
    "// mobeq city file. Units: distances in miles, times in hours, money in USD,\n"
    "// emissions in grams per vehicle-mile, demand in travelers per window.\n";

enum Pop : std::size_t { employees = 0, students = 1, leisure = 2 };

std::vector<Population> standard_populations() {
  return {{0, "employees", 35.0, 0.0}, {1, "students", 15.0, 0.0}, {2, "leisure", 7.0, 0.0}};
}

std::vector<Mode> standard_modes() {
  Mode bus{1, "bus", 15.0, FareScheme::per_trip(2.0), 50, 2800.0, 90.0, false};
  Mode amod{2, "amod", 22.0, FareScheme::per_mile(1.0), 4, 350.0, 12.0, true};
  Mode bike{3, "bike", 8.0, FareScheme::per_mile(0.2), 1, 0.0, 0.5, true};
  return {bus, amod, bike};
}

CityModel skeleton(std::string name, std::string description,
                   const std::vector<std::tuple<std::string, double, double>>& zones) {
  CityModel city;
  city.name = std::move(name);
  city.description = std::move(description);
  for (std::size_t i = 0; i < zones.size(); ++i) {
    const auto& [zone_name, lat, lon] = zones[i];
    city.zones.push_back({i, zone_name, lat, lon});
  }
  city.populations = standard_populations();
  city.modes = standard_modes();
  city.demand = DemandTensor(city.n_zones(), city.n_populations());
  return city;
}

// Splits `total` travelers of population k leaving zone i across destinations by weight.
void put(CityModel& city, std::size_t i, std::size_t k, double total,
         const std::map<std::size_t, double>& weights) {
  double sum = 0.0;
  for (const auto& [j, w] : weights) sum += w;
  for (const auto& [j, w] : weights) city.demand(i, j, k) += total * w / sum;
}

void put_uniform(CityModel& city, std::size_t i, double total, const double (&mix)[3]) {
  std::map<std::size_t, double> everywhere;
  for (std::size_t j = 0; j < city.n_zones(); ++j) {
    if (j != i) everywhere[j] = 1.0;
  }
  for (std::size_t k = 0; k < 3; ++k) put(city, i, k, total * mix[k], everywhere);
}

void finish_populations(CityModel& city) {
  for (std::size_t k = 0; k < city.n_populations(); ++k) {
    city.populations[k].size = city.demand.population_total(k);
  }
}

CityModel boston() {
  CityModel city = skeleton(
      "Boston/Cambridge",
      "Eight landmark zones, about 30,000 travelers per hour. Demand is synthetic-calibrated: "
      "the per-zone population mix follows each landmark's character and the volumes are "
      "tuned by tools/make_datasets.cpp so the bus-doubling and AMoD-fare case studies hold.",
      {{"MIT", 42.3601, -71.0942},
       {"Harvard", 42.3770, -71.1167},
       {"MGH", 42.3631, -71.0686},
       {"Logan Airport", 42.3656, -71.0096},
       {"City Hall", 42.3603, -71.0580},
       {"Boston Common", 42.3551, -71.0656},
       {"Prudential", 42.3471, -71.0825},
       {"Fenway", 42.3467, -71.0972}});

  // Universities send mostly students. Their long trips make the bus the
  // cheapest seat for students, so nominal bus capacity saturates there.
  put(city, 0, students, 905, {{3, 1}});
  put(city, 0, leisure, 700, {{3, 3}, {4, 4}});
  put(city, 0, employees, 100, {{1, 2}, {3, 3}});
  put(city, 1, employees, 100, {{2, 1}, {4, 1}});
  put(city, 1, students, 1305, {{2, 20}, {3, 15}, {4, 20}, {5, 15}, {6, 15}, {7, 15}});
  put(city, 1, leisure, 300, {{5, 1}, {6, 1}});

  // Downtown zones are employee-heavy and ride AMoD at nominal fares with
  // spare bus seats left over.
  put(city, 4, employees, 380, {{0, 80}, {1, 60}, {3, 140}, {6, 50}, {7, 50}});
  put(city, 4, students, 200, {{0, 80}, {6, 60}, {7, 60}});
  put(city, 4, leisure, 120, {{3, 1}, {7, 1}});
  put(city, 5, employees, 360, {{0, 100}, {1, 60}, {3, 150}, {7, 50}});
  put(city, 5, students, 220, {{0, 60}, {6, 80}, {7, 80}});
  put(city, 5, leisure, 120, {{6, 1}, {7, 1}});

  // Hospital, airport and the two commercial hubs carry the bulk of the volume.
  put_uniform(city, 2, 6000, {0.6, 0.15, 0.25});
  put_uniform(city, 3, 7500, {0.4, 0.1, 0.5});
  put_uniform(city, 6, 6190, {0.3, 0.2, 0.5});
  put_uniform(city, 7, 5500, {0.2, 0.3, 0.5});
  finish_populations(city);
  return city;
}

// Synthetic placeholder: every origin sends `per_zone` travelers uniformly.
CityModel scaffold(std::string name, const std::vector<std::tuple<std::string, double, double>>& zones,
                   double per_zone) {
  CityModel city = skeleton(
      std::move(name),
      "Zone and population scaffold. Demand is a synthetic placeholder (uniform destinations, "
      "fixed population mix) and does not describe real travel.",
      zones);
  for (std::size_t i = 0; i < city.n_zones(); ++i) put_uniform(city, i, per_zone, {0.4, 0.2, 0.4});
  finish_populations(city);
  return city;
}

CityModel lugano() {
  return scaffold("Lugano",
                  {{"Centro", 46.0037, 8.9511},
                   {"Stazione FFS", 46.0050, 8.9467},
                   {"USI Campus", 46.0107, 8.9579},
                   {"Paradiso", 45.9897, 8.9436},
                   {"Cassarate", 46.0033, 8.9650},
                   {"Ospedale Civico", 46.0156, 8.9600},
                   {"Cornaredo", 46.0198, 8.9632},
                   {"Lido", 46.0058, 8.9717}},
                  700.0);
}

CityModel kyiv() {
  return scaffold("Kyiv",
                  {{"Maidan Nezalezhnosti", 50.4501, 30.5234},
                   {"Central Station", 50.4406, 30.4889},
                   {"Polytechnic Institute", 50.4489, 30.4573},
                   {"Shevchenko University", 50.4418, 30.5108},
                   {"Pechersk Lavra", 50.4345, 30.5572},
                   {"Podil", 50.4657, 30.5151},
                   {"Obolon", 50.5013, 30.4983},
                   {"Livoberezhna", 50.4518, 30.5980},
                   {"Darnytsia", 50.4560, 30.6290},
                   {"Holosiiv", 50.3973, 30.5094},
                   {"Olimpiiskyi Stadium", 50.4333, 30.5217},
                   {"Sviatoshyn", 50.4574, 30.3908}},
                  2500.0);
}

// A three-zone city small enough for the dense LP oracle.
CityModel tiny() {
  CityModel city = skeleton("Tiny", "Three-zone test city used by the oracle cross-check.",
                            {{"North", 42.370, -71.080}, {"South", 42.350, -71.080},
                             {"East", 42.360, -71.050}});
  city.populations.pop_back();
  city.demand = DemandTensor(3, 2);
  put(city, 0, employees, 120, {{1, 1}, {2, 2}});
  put(city, 0, students, 200, {{1, 3}, {2, 1}});
  put(city, 1, employees, 90, {{0, 1}, {2, 1}});
  put(city, 1, students, 150, {{0, 1}});
  put(city, 2, employees, 60, {{0, 1}, {1, 1}});
  put(city, 2, students, 80, {{1, 1}});
  finish_populations(city);
  return city;
}

ScenarioControls fleet_controls(const CityModel& city, std::int64_t buses, std::int64_t amods,
                                std::int64_t bikes) {
  ScenarioControls c;
  for (std::size_t i = 0; i < city.n_zones(); ++i) {
    c.fleet[{i, 1}] = buses;
    c.fleet[{i, 2}] = amods;
    c.fleet[{i, 3}] = bikes;
  }
  c.tax_rates[2] = 0.2;
  c.tax_rates[3] = 0.2;
  return c;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  out << text;
  if (!out) throw std::runtime_error("cannot write " + path.string());
  std::cout << "wrote " << path.string() << '\n';
}

void write_city(const fs::path& path, const CityModel& city) {
  write_text(path, std::string(kHeader) + city_to_json(city).dump(2) + "\n");
}

int failures = 0;

void expect(bool ok, const std::string& what) {
  std::cout << (ok ? "  ok    " : "  FAIL  ") << what << '\n';
  if (!ok) ++failures;
}

double bus_riders(const EquilibriumReport& r, std::size_t zone) { return r.kpis.riders_at(zone, 1); }

}  // namespace

int main(int argc, char** argv) {
  try {
    const fs::path dir = argc > 1 ? fs::path(argv[1]) : default_data_dir();
    fs::create_directories(dir / "controls");

    const CityModel bos = boston();
    write_city(dir / "boston.city", bos);
    write_city(dir / "lugano.city", lugano());
    write_city(dir / "kyiv.city", kyiv());
    write_city(dir / "tiny.city", tiny());

    const ScenarioControls nominal = fleet_controls(bos, 15, 90, 60);
    ScenarioControls double_buses = fleet_controls(bos, 30, 90, 60);
    ScenarioControls double_fare = nominal;
    double_fare.fare_overrides[2] = FareScheme::per_mile(2.0);
    const auto save_controls = [&](const char* name, const ScenarioControls& c) {
      write_text(dir / "controls" / name, controls_to_json(c, bos).dump(2) + "\n");
    };
    save_controls("nominal.controls", nominal);
    save_controls("double_buses.controls", double_buses);
    save_controls("double_amod_fare.controls", double_fare);
    save_controls("tiny.controls", fleet_controls(tiny(), 2, 10, 20));

    // Reload from disk so the checks see exactly what ships.
    const CityModel shipped = load_city(dir / "boston.city");
    Session session(shipped);
    const EquilibriumReport r1 = session.run_iteration(load_controls(dir / "controls/nominal.controls", shipped));
    const EquilibriumReport r2 =
        session.run_iteration(load_controls(dir / "controls/double_buses.controls", shipped));
    const EquilibriumReport r3 =
        session.run_iteration(load_controls(dir / "controls/double_amod_fare.controls", shipped));
    save_session(session, dir / "golden_boston_session.mobeq");
    std::cout << "wrote " << (dir / "golden_boston_session.mobeq").string() << '\n';

    std::cout << "Boston checks\n";
    expect(std::abs(shipped.demand.total() - 30000.0) < 1e-6, "30,000 travelers per window");
    for (std::size_t z : {0, 1}) {
      const std::string name = shipped.zones[z].name;
      expect(bus_riders(r1, z) == 750.0, name + ": nominal bus departures = 750");
      expect(std::abs(r1.kpis.share(z, 1) - 0.44) <= 0.02, name + ": bus share 44% +- 2%");
      expect(bus_riders(r2, z) == 1500.0, name + ": doubled bus departures = 1500");
    }
    expect(r2.kpis.avg_travel_time_min < r1.kpis.avg_travel_time_min, "travel time falls");
    expect(r2.kpis.co2_kg > r1.kpis.co2_kg, "CO2 rises");
    expect(r2.kpis.revenue[1] > r1.kpis.revenue[1], "bus revenue rises");
    expect(r2.kpis.operating_cost[1] == 2.0 * r1.kpis.operating_cost[1], "bus cost doubles");
    for (std::size_t z : {4, 5}) {
      const std::string name = shipped.zones[z].name;
      const double lost = r1.kpis.share(z, 2) - r3.kpis.share(z, 2);
      const double bus_gain = r3.kpis.share(z, 1) - r1.kpis.share(z, 1);
      expect(r1.kpis.share(z, 2) > 0.0 && r3.kpis.share(z, 2) == 0.0,
             name + ": AMoD share falls to 0");
      expect(bus_gain > 0.5 * lost, name + ": bus absorbs most of it");
    }
    return failures == 0 ? 0 : 1;
  } catch (const std::exception& e) {
    std::cerr << "make_datasets: " << e.what() << '\n';
    return 2;
  }
}
