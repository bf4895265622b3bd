#include <gtest/gtest.h>

#include <sys/wait.h>
#include <unistd.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "mobeq/city_io.hpp"
#include "support/generators.hpp"

using namespace mobeq;
namespace fs = std::filesystem;

namespace {

struct CliRun {
  int exit_code = -1;
  std::string out;
  std::string err;
};

const fs::path kErrFile = fs::temp_directory_path() / ("mobeq_cli_err_" + std::to_string(getpid()));

CliRun run(const std::string& args) {
  const std::string cmd = std::string(MOBEQ_CLI) + " " + args + " 2>" + kErrFile.string();
  CliRun r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  std::array<char, 4096> buf;
  std::size_t n;
  while ((n = fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
  const int status = pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.err = mobeq::testing::slurp(kErrFile.string());
  return r;
}

std::string data(const std::string& rel) { return (default_data_dir() / rel).string(); }

}  // namespace

TEST(Cli, ValidateBundledCity) {
  const CliRun r = run("validate " + data("boston.city"));
  EXPECT_EQ(r.exit_code, 0) << r.err;
  EXPECT_EQ(Json::parse(r.out)["valid"], true);
}

TEST(Cli, ValidateRejectsBadCity) {
  Json doc = read_document(default_data_dir() / "tiny.city");
  doc["zones"][1]["latitude"] = 200;
  const fs::path path = fs::temp_directory_path() / ("bad_" + std::to_string(getpid()) + ".city");
  std::ofstream(path) << doc.dump();
  const CliRun r = run("validate " + path.string());
  fs::remove(path);
  EXPECT_EQ(r.exit_code, 1);
  const Json out = Json::parse(r.out);
  EXPECT_EQ(out["valid"], false);
  EXPECT_EQ(out["violations"][0]["path"], "zones[1].latitude");
}

TEST(Cli, MissingFileIsValidationFailure) {
  EXPECT_EQ(run("validate /nonexistent.city").exit_code, 1);
  EXPECT_EQ(run("frobnicate").exit_code, 1);
}

TEST(Cli, SolveCsvHasOneRowPerZoneMode) {
  const CliRun r = run("solve " + data("boston.city") + " --controls " +
                    data("controls/nominal.controls") + " --format csv");
  ASSERT_EQ(r.exit_code, 0) << r.err;
  std::istringstream in(r.out);
  std::string line;
  std::getline(in, line);
  EXPECT_EQ(line, "zone,mode,share,riders,revenue");
  std::size_t rows = 0;
  while (std::getline(in, line) && !line.empty()) ++rows;
  EXPECT_EQ(rows, 8u * 4u);
  std::getline(in, line);
  EXPECT_EQ(line, "kpi,value");
}

TEST(Cli, SolveIsStableAcrossRuns) {
  const std::string args = "solve " + data("boston.city") + " --controls " +
                           data("controls/double_buses.controls") + " --format csv";
  const CliRun a = run(args), b = run(args + " --serial");
  EXPECT_EQ(a.out, b.out);
  const std::string json_args =
      "solve " + data("boston.city") + " --controls " + data("controls/nominal.controls");
  Json ja = Json::parse(run(json_args).out), jb = Json::parse(run(json_args).out);
  for (Json* j : {&ja, &jb}) {
    j->erase("timestamp");
    (*j)["stats"].erase("wall_time_ms");
  }
  EXPECT_EQ(ja.dump(), jb.dump());
}

TEST(Cli, OracleGapOnSmallCity) {
  const CliRun r = run("solve " + data("tiny.city") + " --controls " + data("controls/tiny.controls") +
                    " --oracle");
  ASSERT_EQ(r.exit_code, 0) << r.err;
  const auto pos = r.err.find("objective gap: ");
  ASSERT_NE(pos, std::string::npos) << r.err;
  EXPECT_LE(std::stod(r.err.substr(pos + 15)), 1e-6);
}

TEST(Cli, SolveWritesOutFile) {
  const fs::path out = fs::temp_directory_path() / ("report_" + std::to_string(getpid()) + ".json");
  const CliRun r = run("solve " + data("tiny.city") + " --controls " + data("controls/tiny.controls") +
                    " --out " + out.string());
  ASSERT_EQ(r.exit_code, 0) << r.err;
  EXPECT_TRUE(r.out.empty());
  const Json report = read_document(out);
  EXPECT_EQ(report["iteration"], 1);
  fs::remove(out);
}

TEST(Cli, ReplayGoldenSession) {
  const CliRun r = run("replay " + data("golden_boston_session.mobeq"));
  EXPECT_EQ(r.exit_code, 0) << r.out << r.err;
  EXPECT_NE(r.out.find("replay ok"), std::string::npos);
}

TEST(Cli, ReplayDetectsTamperedKpis) {
  Json doc = read_document(default_data_dir() / "golden_boston_session.mobeq");
  doc["history"][1]["kpis"]["co2_kg"] = doc["history"][1]["kpis"]["co2_kg"].get<double>() + 1e-3;
  const fs::path path = fs::temp_directory_path() / ("tampered_" + std::to_string(getpid()) + ".mobeq");
  std::ofstream(path) << doc.dump();
  const CliRun r = run("replay " + path.string());
  fs::remove(path);
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_NE(r.out.find("iteration 2: MISMATCH co2_kg"), std::string::npos) << r.out;
}

TEST(Cli, CompareMatchesLibraryDiff) {
  const CliRun r = run("compare " + data("golden_boston_session.mobeq") + " --a 1 --b 2");
  ASSERT_EQ(r.exit_code, 0) << r.err;
  const Session s = load_session(default_data_dir() / "golden_boston_session.mobeq");
  const std::string csv = diff_to_csv(s.diff(1, 2), s.city());
  EXPECT_NE(r.out.find(csv), std::string::npos);
  EXPECT_NE(r.out.find("avg_travel_time_min"), std::string::npos);
  EXPECT_EQ(run("compare " + data("golden_boston_session.mobeq") + " --a 1 --b 9").exit_code, 1);
}
