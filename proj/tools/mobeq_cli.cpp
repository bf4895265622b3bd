// mobeq command-line entry point.
//
// Exit codes: 0 success, 1 validation failure, 2 internal error.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "mobeq/city_io.hpp"
#include "mobeq/equilibrium.hpp"
#include "mobeq/service.hpp"
#include "mobeq/session.hpp"

namespace fs = std::filesystem;
using namespace mobeq;

namespace {

constexpr int kOk = 0;
constexpr int kInvalid = 1;
constexpr int kInternal = 2;

Json violations_json(const ValidationReport& report) {
  Json out = Json::array();
  for (const auto& v : report.violations) {
    out.push_back({{"code", v.code}, {"message", v.message}, {"path", v.path}});
  }
  return out;
}

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(out_path, std::ios::trunc);
  out << text;
  if (!out) throw std::runtime_error("cannot write " + out_path);
}

int cmd_validate(const std::string& path) {
  try {
    const CityModel city = load_city(fs::path(path));
    std::cout << Json{{"valid", true},
                      {"name", city.name},
                      {"zones", city.n_zones()},
                      {"populations", city.n_populations()},
                      {"modes", city.n_modes()},
                      {"violations", Json::array()}}
                     .dump(2)
              << '\n';
    return kOk;
  } catch (const FormatError& e) {
    std::cout << Json{{"valid", false},
                      {"error", to_string(e.kind())},
                      {"message", e.what()},
                      {"violations", violations_json(e.report())}}
                     .dump(2)
              << '\n';
    std::cerr << e.what() << '\n';
    return kInvalid;
  }
}

struct SolveArgs {
  std::string city;
  std::string controls;
  bool oracle = false;
  bool serial = false;
  std::string out;
  std::string format = "json";
};

int cmd_solve(const SolveArgs& args) {
  const CityModel city = load_city(fs::path(args.city));
  const ScenarioControls controls = load_controls(fs::path(args.controls), city);
  SolveOptions opts;
  opts.execution = args.serial ? Execution::serial : Execution::parallel;
  const EquilibriumReport report = evaluate_scenario(city, controls, 1, opts);

  if (args.format == "csv") {
    emit(report_to_csv(report, city), args.out);
  } else {
    emit(report_to_json(report, city).dump(2) + "\n", args.out);
  }

  if (args.oracle) {
    const GameInstance inst = build_instance(city, controls);
    const EquilibriumResult oracle = oracle_solve(inst);
    const double gap = std::abs(report.stats.objective - oracle.stats.objective) /
                       std::max(1.0, std::abs(oracle.stats.objective));
    char line[64];
    std::snprintf(line, sizeof line, "objective gap: %.1e", gap);
    std::cerr << line << '\n';
    if (gap > kObjectiveRelTol) {
      std::cerr << "decomposed objective " << report.stats.objective << " disagrees with oracle "
                << oracle.stats.objective << '\n';
      return kInternal;
    }
  }
  return kOk;
}

bool same(double stored, double fresh) {
  return std::abs(stored - fresh) <= 1e-9 * std::max(1.0, std::abs(stored));
}

// Describes the first field where two KPI bundles differ, or returns empty.
std::string kpi_mismatch(const KpiBundle& stored, const KpiBundle& fresh, const CityModel& city) {
  const auto scalar = [](const char* name, double a, double b) -> std::string {
    if (same(a, b)) return {};
    std::ostringstream os;
    os << std::setprecision(17) << name << ": stored " << a << ", re-run " << b;
    return os.str();
  };
  const auto vector = [&](const char* name, const std::vector<double>& a,
                          const std::vector<double>& b) -> std::string {
    if (a.size() != b.size()) return std::string(name) + ": shape differs";
    for (std::size_t n = 0; n < a.size(); ++n) {
      if (!same(a[n], b[n])) {
        std::ostringstream os;
        os << std::setprecision(17) << name << "[" << n << "]: stored " << a[n] << ", re-run "
           << b[n];
        return os.str();
      }
    }
    return {};
  };
  (void)city;
  for (std::string diff : {scalar("travelers", stored.travelers, fresh.travelers),
                           scalar("avg_travel_time_min", stored.avg_travel_time_min,
                                  fresh.avg_travel_time_min),
                           scalar("co2_kg", stored.co2_kg, fresh.co2_kg),
                           scalar("tax_revenue", stored.tax_revenue, fresh.tax_revenue),
                           vector("revenue", stored.revenue, fresh.revenue),
                           vector("operating_cost", stored.operating_cost, fresh.operating_cost),
                           vector("co2_by_mode", stored.co2_by_mode, fresh.co2_by_mode),
                           vector("riders", stored.riders, fresh.riders),
                           vector("mode_share", stored.mode_share, fresh.mode_share),
                           vector("zone_revenue", stored.zone_revenue, fresh.zone_revenue)}) {
    if (!diff.empty()) return diff;
  }
  return {};
}

int cmd_replay(const std::string& path) {
  const Session session = load_session(fs::path(path));
  int status = kOk;
  for (const auto& stored : session.history()) {
    const EquilibriumReport fresh =
        evaluate_scenario(session.city(), stored.controls, stored.iteration);
    const std::string diff = kpi_mismatch(stored.kpis, fresh.kpis, session.city());
    if (diff.empty()) {
      std::cout << "iteration " << stored.iteration << ": ok\n";
    } else {
      std::cout << "iteration " << stored.iteration << ": MISMATCH " << diff << '\n';
      status = kInvalid;
    }
  }
  std::cout << (status == kOk ? "replay ok" : "replay FAILED") << " (" << session.size()
            << " iterations)\n";
  return status;
}

int cmd_compare(const std::string& path, std::size_t a, std::size_t b) {
  const Session session = load_session(fs::path(path));
  const IterationDiff diff = session.diff(a, b);
  const CityModel& city = session.city();
  const KpiBundle& ka = session.report(a).kpis;
  const KpiBundle& kb = session.report(b).kpis;

  std::ostringstream table;
  table << std::fixed << std::setprecision(4);
  const auto row = [&](const std::string& name, double va, double vb) {
    table << std::left << std::setw(28) << name << std::right << std::setw(16) << va
          << std::setw(16) << vb << std::setw(16) << vb - va << '\n';
  };
  table << std::left << std::setw(28) << "kpi" << std::right << std::setw(16)
        << ("iter " + std::to_string(a)) << std::setw(16) << ("iter " + std::to_string(b))
        << std::setw(16) << "delta" << '\n';
  row("avg_travel_time_min", ka.avg_travel_time_min, kb.avg_travel_time_min);
  row("co2_kg", ka.co2_kg, kb.co2_kg);
  row("tax_revenue", ka.tax_revenue, kb.tax_revenue);
  for (std::size_t m = 0; m < city.n_modes(); ++m) {
    row("revenue_" + city.mode(m).name, ka.revenue[m], kb.revenue[m]);
  }
  for (std::size_t m = 0; m < city.n_modes(); ++m) {
    row("operating_cost_" + city.mode(m).name, ka.operating_cost[m], kb.operating_cost[m]);
  }
  for (std::size_t i = 0; i < city.n_zones(); ++i) {
    for (std::size_t m = 0; m < city.n_modes(); ++m) {
      row("share " + city.zones[i].name + "/" + city.mode(m).name, ka.share(i, m),
          kb.share(i, m));
    }
  }
  std::cout << table.str() << '\n' << diff_to_csv(diff, city);
  return kOk;
}

int cmd_serve(ServiceOptions options) {
  Service service(std::move(options));
  const int port = service.bind();
  std::cerr << "mobeq listening on http://" << service.options().addr << ":" << port << '\n';
  service.run();
  return kOk;
}

template <typename F>
int guarded(F&& fn) {
  try {
    return fn();
  } catch (const FormatError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInvalid;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n' << e.report().to_string() << '\n';
    return kInvalid;
  } catch (const PreconditionError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInvalid;
  } catch (const IterationNotFound& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInvalid;
  } catch (const SolverVerifierDisagreement& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    for (const auto& w : e.certificate().witnesses) {
      std::cerr << "  witness i=" << w.origin << " j=" << w.destination << " k=" << w.population
                << " m=" << w.mode << " m'=" << w.alternative << '\n';
    }
    return kInternal;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kInternal;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mobeq: multi-modal mobility equilibrium engine"};
  app.require_subcommand(1);

  std::string validate_path;
  auto* validate = app.add_subcommand("validate", "Check a city file and print its report");
  validate->add_option("city-file", validate_path)->required();

  SolveArgs solve_args;
  auto* solve = app.add_subcommand("solve", "Solve one scenario and write its report");
  solve->add_option("city-file", solve_args.city)->required();
  solve->add_option("--controls", solve_args.controls, "Scenario controls file")->required();
  solve->add_flag("--oracle", solve_args.oracle, "Cross-check against the dense LP");
  solve->add_flag("--serial", solve_args.serial, "Solve zones on one thread");
  solve->add_option("--out", solve_args.out, "Write the report here instead of stdout");
  solve->add_option("--format", solve_args.format)->check(CLI::IsMember({"json", "csv"}));

  std::string replay_path;
  auto* replay = app.add_subcommand("replay", "Re-run a session file and compare KPIs");
  replay->add_option("session-file", replay_path)->required();

  std::string compare_path;
  std::size_t compare_a = 0, compare_b = 0;
  auto* compare = app.add_subcommand("compare", "Print KPI deltas between two iterations");
  compare->add_option("session-file", compare_path)->required();
  compare->add_option("--a", compare_a)->required();
  compare->add_option("--b", compare_b)->required();

  ServiceOptions serve_opts;
  std::string static_dir, session_dir;
  double timeout_s = 30.0;
  bool addr_set = false, port_set = false;
  auto* serve = app.add_subcommand("serve", "Start the HTTP service");
  serve->add_option("--addr", serve_opts.addr)->each([&](const std::string&) { addr_set = true; });
  serve->add_option("--port", serve_opts.port)
      ->check(CLI::Range(0, 65535))
      ->each([&](const std::string&) { port_set = true; });
  serve->add_option("--data-dir", serve_opts.data_dir, "Directory with bundled .city files");
  serve->add_option("--static-dir", static_dir, "UI bundle served at /");
  serve->add_option("--session-dir", session_dir, "Persist sessions in this directory");
  serve->add_option("--timeout", timeout_s, "Solve timeout in seconds")
      ->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInvalid;
  }

  if (*validate) return guarded([&] { return cmd_validate(validate_path); });
  if (*solve) return guarded([&] { return cmd_solve(solve_args); });
  if (*replay) return guarded([&] { return cmd_replay(replay_path); });
  if (*compare) return guarded([&] { return cmd_compare(compare_path, compare_a, compare_b); });
  if (*serve) {
    return guarded([&] {
      ServiceOptions opts = serve_opts;
      apply_environment(opts);
      // Explicit flags win over the environment.
      if (addr_set) opts.addr = serve_opts.addr;
      if (port_set) opts.port = serve_opts.port;
      if (!static_dir.empty()) opts.static_dir = static_dir;
      if (!session_dir.empty()) opts.session_dir = session_dir;
      opts.solve_timeout =
          std::chrono::milliseconds(static_cast<std::int64_t>(timeout_s * 1000.0));
      return cmd_serve(std::move(opts));
    });
  }
  return kInvalid;
}
