#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "mobeq/city_io.hpp"
#include "mobeq/session.hpp"

namespace httplib {
class Server;
}

namespace mobeq {

struct ServiceOptions {
  std::string addr = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  std::filesystem::path data_dir = default_data_dir();
  std::optional<std::filesystem::path> static_dir;   // UI bundle mounted at /
  std::optional<std::filesystem::path> session_dir;  // persist sessions here if set
  std::chrono::milliseconds solve_timeout{30000};
  Execution execution = Execution::parallel;
};

/// Overrides addr/port from MOBEQ_ADDR and MOBEQ_PORT when set.
void apply_environment(ServiceOptions& options);

/// HTTP facade under /api/v1. Every error body is
/// {"code": ..., "message": ..., "details": ...}.
class Service {
 public:
  explicit Service(ServiceOptions options);
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Binds the socket and returns the bound port. Throws std::runtime_error.
  int bind();
  /// Serves until stop(). Call bind() first.
  void run();
  void stop();
  void wait_until_ready() const;

  const ServiceOptions& options() const { return options_; }
  SessionStore& sessions() { return sessions_; }

 private:
  struct CityEntry {
    std::string id;
    std::shared_ptr<const CityModel> city;
    bool bundled = false;
  };

  void install_routes();
  void restore_sessions();
  void persist(const SessionStore::Entry& entry) const;
  std::optional<CityEntry> find_city(const std::string& id) const;
  std::string add_city(CityModel city);

  ServiceOptions options_;
  std::unique_ptr<httplib::Server> server_;
  SessionStore sessions_;
  mutable std::mutex cities_mutex_;
  std::map<std::string, CityEntry> cities_;
  std::size_t uploads_ = 0;
};

}  // namespace mobeq
