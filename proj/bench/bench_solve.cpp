// Times the equilibrium solvers: parallel vs serial zone decomposition, and
// the decomposition vs the dense LP oracle on small cities.
//
//   mobeq_bench [repetitions]

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <random>
#include <string>
#include <vector>

#include "mobeq/city_io.hpp"
#include "mobeq/equilibrium.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

using namespace mobeq;

namespace {

// Random city with `n` zones spread over a few miles.
GameInstance synthetic(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  CityModel city;
  city.name = "synthetic";
  for (std::size_t i = 0; i < n; ++i) {
    city.zones.push_back({i, "z" + std::to_string(i), 42.30 + 0.1 * u(rng), -71.15 + 0.1 * u(rng)});
  }
  city.populations = {{0, "a", 30.0, 0.0}, {1, "b", 12.0, 0.0}, {2, "c", 6.0, 0.0}};
  city.modes = {{1, "bus", 15.0, FareScheme::per_trip(2.0), 50, 2800.0, 90.0, false},
                {2, "amod", 22.0, FareScheme::per_mile(1.0), 4, 350.0, 12.0, true},
                {3, "bike", 8.0, FareScheme::per_mile(0.2), 1, 0.0, 0.5, true}};
  city.demand = DemandTensor(n, 3);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (i == j) continue;
      for (std::size_t k = 0; k < 3; ++k) city.demand(i, j, k) = std::floor(40.0 * u(rng));
    }
  }
  for (std::size_t k = 0; k < 3; ++k) city.populations[k].size = city.demand.population_total(k);
  ScenarioControls controls;
  for (std::size_t i = 0; i < n; ++i) {
    controls.fleet[{i, 1}] = 10;
    controls.fleet[{i, 2}] = 60;
    controls.fleet[{i, 3}] = 40;
  }
  return build_instance(city, controls);
}

template <typename F>
double median_ms(int reps, F&& fn) {
  std::vector<double> samples;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    fn();
    samples.push_back(
        std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count());
  }
  std::sort(samples.begin(), samples.end());
  return samples[samples.size() / 2];
}

void row(const std::string& name, std::size_t vars, double a_ms, double b_ms, const char* a,
         const char* b) {
  std::printf("%-22s %10zu %10s %10.3f ms %10s %10.3f ms  x%.2f\n", name.c_str(), vars, a, a_ms,
              b, b_ms, b_ms / std::max(a_ms, 1e-9));
}

}  // namespace

int main(int argc, char** argv) {
  const int reps = argc > 1 ? std::max(1, std::atoi(argv[1])) : 5;
#ifdef _OPENMP
  std::printf("OpenMP threads: %d\n", omp_get_max_threads());
#else
  std::printf("OpenMP disabled\n");
#endif
  SolveOptions parallel{Execution::parallel, std::nullopt};
  SolveOptions serial{Execution::serial, std::nullopt};

  std::printf("\nparallel vs serial decomposition\n");
  std::vector<std::pair<std::string, GameInstance>> cases;
  for (const auto& named : bundled_datasets()) {
    const CityModel& city = named.city;
    ScenarioControls controls;
    for (std::size_t i = 0; i < city.n_zones(); ++i) {
      for (std::size_t m = 1; m < city.n_modes(); ++m) controls.fleet[{i, m}] = 30;
    }
    cases.emplace_back(named.id, build_instance(city, controls));
  }
  for (std::size_t n : {50, 100}) cases.emplace_back("synthetic-" + std::to_string(n), synthetic(n, n));
  for (const auto& [name, inst] : cases) {
    const double p = median_ms(reps, [&] { solve_equilibrium(inst, parallel); });
    const double s = median_ms(reps, [&] { solve_equilibrium(inst, serial); });
    row(name, inst.full_variable_count(), p, s, "parallel", "serial");
  }

  std::printf("\ndecomposition vs dense LP oracle\n");
  for (std::size_t n : {3, 5, 7}) {
    const GameInstance inst = synthetic(n, 100 + n);
    const double d = median_ms(reps, [&] { solve_equilibrium(inst, serial); });
    const double o = median_ms(reps, [&] { oracle_solve(inst); });
    row("synthetic-" + std::to_string(n), inst.full_variable_count(), d, o, "decomposed",
        "oracle");
  }
  return 0;
}
