#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include "mobeq/equilibrium.hpp"
#include "mobeq/metrics.hpp"
#include "mobeq/model.hpp"

namespace mobeq {

struct EquilibriumReport {
  std::size_t iteration = 0;  // 1-based
  ScenarioControls controls;
  Configuration configuration;
  KpiBundle kpis;
  NashCertificate nash;
  SolveStats stats;
  std::string timestamp;  // ISO-8601 UTC
};

/// The solver returned a configuration the verifier rejects. This is an
/// engine defect; the report is never stored.
class SolverVerifierDisagreement : public std::runtime_error {
 public:
  SolverVerifierDisagreement(const std::string& what, NashCertificate certificate,
                             ValidationReport feasibility)
      : std::runtime_error(what),
        certificate_(std::move(certificate)),
        feasibility_(std::move(feasibility)) {}
  const NashCertificate& certificate() const { return certificate_; }
  const ValidationReport& feasibility() const { return feasibility_; }

 private:
  NashCertificate certificate_;
  ValidationReport feasibility_;
};

class IterationNotFound : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

struct IterationDiff {
  std::size_t a = 0;
  std::size_t b = 0;
  KpiDelta delta;
};

/// Builds, solves, verifies and measures one scenario. Throws ValidationError
/// on bad controls and SolverVerifierDisagreement on a failed certificate.
EquilibriumReport evaluate_scenario(const CityModel& city, const ScenarioControls& controls,
                                    std::size_t iteration, const SolveOptions& options = {});

/// An ordered what-if history over one fixed city.
class Session {
 public:
  /// Throws ValidationError if the city is invalid.
  explicit Session(CityModel city);
  Session(std::string id, CityModel city, std::vector<EquilibriumReport> history);

  const std::string& id() const { return id_; }
  const CityModel& city() const { return *city_; }
  const std::vector<EquilibriumReport>& history() const { return history_; }
  std::size_t size() const { return history_.size(); }

  const EquilibriumReport& report(std::size_t iteration) const;

  const EquilibriumReport& run_iteration(const ScenarioControls& controls,
                                         const SolveOptions& options = {});
  /// Re-solves the latest controls as a new iteration.
  const EquilibriumReport& rerun(const SolveOptions& options = {});
  void reset() { history_.clear(); }

  IterationDiff diff(std::size_t a, std::size_t b) const;

 private:
  std::string id_;
  std::shared_ptr<const CityModel> city_;
  std::vector<EquilibriumReport> history_;
};

Session create_session(CityModel city);

/// Opaque unique token.
std::string new_session_id();

/// Thread-safe in-memory sessions. Mutations of one session are serialized;
/// reads take a shared lock and see whole iterations only.
class SessionStore {
 public:
  struct Entry {
    mutable std::shared_mutex mutex;
    std::string city_id;
    Session session;
    Entry(std::string city, Session s) : city_id(std::move(city)), session(std::move(s)) {}
  };

  std::shared_ptr<Entry> create(const std::string& city_id, CityModel city);
  std::shared_ptr<Entry> insert(const std::string& city_id, Session session);
  std::shared_ptr<Entry> find(const std::string& id) const;
  bool erase(const std::string& id);
  std::vector<std::string> ids() const;

 private:
  mutable std::mutex mutex_;
  std::map<std::string, std::shared_ptr<Entry>> sessions_;
};

}  // namespace mobeq
