#include "mobeq/session.hpp"

#include <atomic>
#include <chrono>
#include <ctime>
#include <iomanip>
#include <random>
#include <sstream>

namespace mobeq {

namespace {

std::string utc_now() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t secs = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&secs, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return os.str();
}

}  // namespace

std::string new_session_id() {
  static std::atomic<std::uint64_t> counter{0};
  static const std::uint64_t salt = [] {
    std::random_device rd;
    return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
  }();
  std::mt19937_64 mix(salt ^ (counter.fetch_add(1) * 0x9E3779B97F4A7C15ULL));
  std::ostringstream os;
  os << std::hex << std::setfill('0') << std::setw(16) << mix() << std::setw(16) << mix();
  return os.str();
}

EquilibriumReport evaluate_scenario(const CityModel& city, const ScenarioControls& controls,
                                    std::size_t iteration, const SolveOptions& options) {
  const GameInstance inst = build_instance(city, controls);
  EquilibriumResult solved = solve_equilibrium(inst, options);

  EquilibriumReport report;
  report.iteration = iteration;
  report.controls = controls;
  report.nash = verify_nash(inst, solved.configuration);
  ValidationReport feasibility = check_feasible(inst, solved.configuration);
  if (!report.nash.verdict || !feasibility.ok()) {
    throw SolverVerifierDisagreement(
        "solver output failed verification (" + std::to_string(report.nash.witnesses.size()) +
            " Nash witnesses, " + std::to_string(feasibility.violations.size()) +
            " feasibility violations)",
        report.nash, std::move(feasibility));
  }
  report.kpis = compute_kpis(inst, solved.configuration, city, controls);
  report.configuration = std::move(solved.configuration);
  report.stats = std::move(solved.stats);
  report.timestamp = utc_now();
  return report;
}

Session::Session(CityModel city) : Session(new_session_id(), std::move(city), {}) {}

Session::Session(std::string id, CityModel city, std::vector<EquilibriumReport> history)
    : id_(std::move(id)),
      city_(std::make_shared<const CityModel>(std::move(city))),
      history_(std::move(history)) {
  if (auto r = validate_city(*city_); !r.ok()) {
    throw ValidationError("invalid city", std::move(r));
  }
  for (std::size_t n = 0; n < history_.size(); ++n) {
    if (history_[n].iteration != n + 1) {
      throw std::invalid_argument("session iterations must be numbered 1..n");
    }
  }
}

const EquilibriumReport& Session::report(std::size_t iteration) const {
  if (iteration == 0 || iteration > history_.size()) {
    throw IterationNotFound("no iteration " + std::to_string(iteration) + " (session has " +
                            std::to_string(history_.size()) + ")");
  }
  return history_[iteration - 1];
}

const EquilibriumReport& Session::run_iteration(const ScenarioControls& controls,
                                                const SolveOptions& options) {
  history_.push_back(evaluate_scenario(*city_, controls, history_.size() + 1, options));
  return history_.back();
}

const EquilibriumReport& Session::rerun(const SolveOptions& options) {
  if (history_.empty()) throw IterationNotFound("nothing to re-run: the session is empty");
  const ScenarioControls last = history_.back().controls;
  return run_iteration(last, options);
}

IterationDiff Session::diff(std::size_t a, std::size_t b) const {
  return {a, b, kpi_delta(report(a).kpis, report(b).kpis)};
}

Session create_session(CityModel city) { return Session(std::move(city)); }

std::shared_ptr<SessionStore::Entry> SessionStore::create(const std::string& city_id,
                                                          CityModel city) {
  return insert(city_id, Session(std::move(city)));
}

std::shared_ptr<SessionStore::Entry> SessionStore::insert(const std::string& city_id,
                                                          Session session) {
  auto entry = std::make_shared<Entry>(city_id, std::move(session));
  std::lock_guard lock(mutex_);
  sessions_[entry->session.id()] = entry;
  return entry;
}

std::shared_ptr<SessionStore::Entry> SessionStore::find(const std::string& id) const {
  std::lock_guard lock(mutex_);
  auto it = sessions_.find(id);
  return it == sessions_.end() ? nullptr : it->second;
}

bool SessionStore::erase(const std::string& id) {
  std::lock_guard lock(mutex_);
  return sessions_.erase(id) > 0;
}

std::vector<std::string> SessionStore::ids() const {
  std::lock_guard lock(mutex_);
  std::vector<std::string> out;
  for (const auto& [id, entry] : sessions_) out.push_back(id);
  return out;
}

}  // namespace mobeq
