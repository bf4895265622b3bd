#pragma once

#include <filesystem>
#include <iosfwd>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "mobeq/metrics.hpp"
#include "mobeq/model.hpp"
#include "mobeq/session.hpp"

namespace mobeq {

using Json = nlohmann::ordered_json;

inline constexpr std::string_view kSchemaVersion = "1";

/// Why a document was rejected.
enum class FormatErrorKind { syntax, schema, semantic, version };
const char* to_string(FormatErrorKind kind);

class FormatError : public std::runtime_error {
 public:
  FormatError(FormatErrorKind kind, const std::string& what, ValidationReport report = {})
      : std::runtime_error(what), kind_(kind), report_(std::move(report)) {}
  FormatErrorKind kind() const { return kind_; }
  const ValidationReport& report() const { return report_; }

 private:
  FormatErrorKind kind_;
  ValidationReport report_;
};

/// Parses text that may carry // and /* */ comments. Throws FormatError(syntax)
/// with the line and column of the first error.
Json parse_document(std::string_view text);
Json read_document(const std::filesystem::path& path);

// City files. Strict: unknown keys, wrong types and out-of-range values are
// schema errors; failed invariants are semantic errors.
CityModel city_from_json(const Json& doc);
Json city_to_json(const CityModel& city);
CityModel load_city(const std::filesystem::path& path);
CityModel load_city(std::istream& in);
void save_city(const CityModel& city, const std::filesystem::path& path);

// Scenario controls; modes are referenced by name, zones by id.
ScenarioControls controls_from_json(const Json& doc, const CityModel& city);
Json controls_to_json(const ScenarioControls& controls, const CityModel& city);
ScenarioControls load_controls(const std::filesystem::path& path, const CityModel& city);

Json kpis_to_json(const KpiBundle& kpis, const CityModel& city);
KpiBundle kpis_from_json(const Json& doc, const CityModel& city);
Json kpi_delta_to_json(const IterationDiff& diff, const CityModel& city);
Json nash_to_json(const NashCertificate& cert, const CityModel& city);
Json stats_to_json(const SolveStats& stats);

struct ReportJsonOptions {
  bool include_configuration = true;
  bool full_witnesses = true;
};
Json report_to_json(const EquilibriumReport& report, const CityModel& city,
                    const ReportJsonOptions& options = {});
EquilibriumReport report_from_json(const Json& doc, const CityModel& city);

/// Rows `zone,mode,share,riders,revenue`, then a blank line and `kpi,value` rows.
std::string report_to_csv(const EquilibriumReport& report, const CityModel& city);
std::string diff_to_csv(const IterationDiff& diff, const CityModel& city);

// Session files: the city embedded verbatim plus the history with sparse x.
Json session_to_json(const Session& session);
Session session_from_json(const Json& doc);
void save_session(const Session& session, const std::filesystem::path& path);
Session load_session(const std::filesystem::path& path);

/// Directory holding the bundled datasets: $MOBEQ_DATA_DIR if set, otherwise
/// the source tree's data/ directory.
std::filesystem::path default_data_dir();

struct NamedCity {
  std::string id;  // file stem, e.g. "boston"
  CityModel city;
};

/// Boston/Cambridge, then the Lugano and Kyiv scaffolds.
std::vector<NamedCity> bundled_datasets(const std::filesystem::path& data_dir = default_data_dir());

}  // namespace mobeq
