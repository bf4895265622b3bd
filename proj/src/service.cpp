#include "mobeq/service.hpp"

#include <cctype>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <shared_mutex>

#include "httplib.h"

namespace mobeq {

namespace {

constexpr const char* kJson = "application/json";

Json api_error(const std::string& code, const std::string& message, Json details = nullptr) {
  return {{"code", code}, {"message", message}, {"details", std::move(details)}};
}

void send(httplib::Response& res, int status, const Json& body) {
  res.status = status;
  res.set_content(body.dump(), kJson);
}

void send_error(httplib::Response& res, int status, const std::string& code,
                const std::string& message, Json details = nullptr) {
  send(res, status, api_error(code, message, std::move(details)));
}

Json report_json(const ValidationReport& report) {
  Json out = Json::array();
  for (const auto& v : report.violations) {
    Json e = {{"code", v.code}, {"message", v.message}, {"path", v.path}};
    if (v.residual != 0.0) e["residual"] = v.residual;
    out.push_back(std::move(e));
  }
  return {{"violations", std::move(out)}};
}

std::string slug(const std::string& name) {
  std::string out;
  for (char c : name) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    } else if (!out.empty() && out.back() != '-') {
      out += '-';
    }
  }
  while (!out.empty() && out.back() == '-') out.pop_back();
  return out.empty() ? "city" : out;
}

std::optional<std::size_t> parse_index(const std::string& text) {
  if (text.empty() || text.size() > 9) return std::nullopt;
  std::size_t value = 0;
  for (char c : text) {
    if (!std::isdigit(static_cast<unsigned char>(c))) return std::nullopt;
    value = value * 10 + static_cast<std::size_t>(c - '0');
  }
  return value;
}

Json city_summary(const std::string& id, const CityModel& city, bool bundled) {
  Json modes = Json::array();
  for (std::size_t m = 0; m < city.n_modes(); ++m) modes.push_back(city.mode(m).name);
  Json zones = Json::array();
  for (const auto& z : city.zones) {
    zones.push_back(
        {{"id", z.id}, {"name", z.name}, {"latitude", z.latitude}, {"longitude", z.longitude}});
  }
  Json pops = Json::array();
  for (const auto& p : city.populations) {
    pops.push_back({{"id", p.id}, {"name", p.name}, {"value_of_time", p.value_of_time}});
  }
  return {{"id", id},
          {"name", city.name},
          {"description", city.description},
          {"bundled", bundled},
          {"travelers", city.demand.total()},
          {"zones", std::move(zones)},
          {"populations", std::move(pops)},
          {"modes", std::move(modes)}};
}

Json history_json(const SessionStore::Entry& entry) {
  const Session& s = entry.session;
  ReportJsonOptions opts;
  opts.include_configuration = false;
  opts.full_witnesses = false;
  Json iterations = Json::array();
  for (const auto& r : s.history()) iterations.push_back(report_to_json(r, s.city(), opts));
  return {{"id", s.id()}, {"city_id", entry.city_id}, {"iterations", std::move(iterations)}};
}

}  // namespace

void apply_environment(ServiceOptions& options) {
  if (const char* addr = std::getenv("MOBEQ_ADDR"); addr && *addr) options.addr = addr;
  if (const char* port = std::getenv("MOBEQ_PORT"); port && *port) {
    auto p = parse_index(port);
    if (!p || *p > 65535) throw std::invalid_argument("MOBEQ_PORT is not a valid port");
    options.port = static_cast<int>(*p);
  }
}

Service::Service(ServiceOptions options)
    : options_(std::move(options)), server_(std::make_unique<httplib::Server>()) {
  for (auto& named : bundled_datasets(options_.data_dir)) {
    cities_[named.id] = {named.id, std::make_shared<const CityModel>(std::move(named.city)), true};
  }
  if (options_.session_dir) {
    std::filesystem::create_directories(*options_.session_dir);
    restore_sessions();
  }
  install_routes();
  if (options_.static_dir) {
    if (!server_->set_mount_point("/", options_.static_dir->string())) {
      throw std::runtime_error("static directory not found: " + options_.static_dir->string());
    }
  }
}

Service::~Service() { stop(); }

int Service::bind() {
  if (options_.port == 0) {
    const int port = server_->bind_to_any_port(options_.addr);
    if (port < 0) throw std::runtime_error("cannot bind " + options_.addr);
    return port;
  }
  if (!server_->bind_to_port(options_.addr, options_.port)) {
    throw std::runtime_error("cannot bind " + options_.addr + ":" +
                             std::to_string(options_.port));
  }
  return options_.port;
}

void Service::run() { server_->listen_after_bind(); }

void Service::stop() {
  if (server_) server_->stop();
}

void Service::wait_until_ready() const { server_->wait_until_ready(); }

std::optional<Service::CityEntry> Service::find_city(const std::string& id) const {
  std::lock_guard lock(cities_mutex_);
  auto it = cities_.find(id);
  if (it == cities_.end()) return std::nullopt;
  return it->second;
}

std::string Service::add_city(CityModel city) {
  std::lock_guard lock(cities_mutex_);
  std::string id = slug(city.name);
  if (cities_.count(id)) id += "-" + std::to_string(++uploads_);
  while (cities_.count(id)) id = slug(city.name) + "-" + std::to_string(++uploads_);
  cities_[id] = {id, std::make_shared<const CityModel>(std::move(city)), false};
  return id;
}

void Service::restore_sessions() {
  for (const auto& file : std::filesystem::directory_iterator(*options_.session_dir)) {
    if (file.path().extension() != ".mobeq") continue;
    try {
      Json doc = read_document(file.path());
      const std::string city_id = doc.value("city_id", std::string("uploaded"));
      doc.erase("city_id");
      sessions_.insert(city_id, session_from_json(doc));
    } catch (const std::exception& e) {
      std::cerr << "skipping " << file.path() << ": " << e.what() << '\n';
    }
  }
}

void Service::persist(const SessionStore::Entry& entry) const {
  if (!options_.session_dir) return;
  Json doc = session_to_json(entry.session);
  doc["city_id"] = entry.city_id;
  const auto path = *options_.session_dir / (entry.session.id() + ".mobeq");
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::trunc);
    out << doc.dump(1) << '\n';
    if (!out) throw std::runtime_error("cannot write " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

void Service::install_routes() {
  auto& srv = *server_;
  srv.set_payload_max_length(64u << 20);

  srv.set_exception_handler([](const httplib::Request&, httplib::Response& res,
                               std::exception_ptr ep) {
    try {
      std::rethrow_exception(ep);
    } catch (const std::exception& e) {
      send_error(res, 500, "internal_error", e.what());
    } catch (...) {
      send_error(res, 500, "internal_error", "unknown error");
    }
  });

  srv.set_error_handler([](const httplib::Request& req, httplib::Response& res) {
    if (!res.body.empty()) return;
    if (res.status == 404) {
      send_error(res, 404, "not_found", "no route for " + req.method + " " + req.path);
    } else if (res.status == 405) {
      send_error(res, 405, "method_not_allowed", req.method + " " + req.path);
    } else if (res.status >= 400) {
      send_error(res, res.status, "http_error", httplib::status_message(res.status));
    }
  });

  srv.Get("/api/v1/cities", [this](const httplib::Request&, httplib::Response& res) {
    Json out = Json::array();
    std::lock_guard lock(cities_mutex_);
    for (const auto& [id, entry] : cities_) {
      out.push_back(city_summary(id, *entry.city, entry.bundled));
    }
    send(res, 200, out);
  });

  srv.Get("/api/v1/cities/:id", [this](const httplib::Request& req, httplib::Response& res) {
    auto entry = find_city(req.path_params.at("id"));
    if (!entry) return send_error(res, 404, "unknown_city", "no such city");
    Json out = city_summary(entry->id, *entry->city, entry->bundled);
    out["city"] = city_to_json(*entry->city);
    send(res, 200, out);
  });

  srv.Post("/api/v1/cities", [this](const httplib::Request& req, httplib::Response& res) {
    try {
      CityModel city = city_from_json(parse_document(req.body));
      const std::string name = city.name;
      const std::string id = add_city(std::move(city));
      send(res, 201, {{"id", id}, {"name", name}});
    } catch (const FormatError& e) {
      send_error(res, 422, std::string("invalid_city_") + to_string(e.kind()), e.what(),
                 report_json(e.report()));
    }
  });

  srv.Post("/api/v1/sessions", [this](const httplib::Request& req, httplib::Response& res) {
    Json body;
    try {
      body = parse_document(req.body);
    } catch (const FormatError& e) {
      return send_error(res, 422, "invalid_payload", e.what());
    }
    if (!body.is_object() || !body.contains("city_id") || !body["city_id"].is_string()) {
      return send_error(res, 422, "invalid_payload", "expected {\"city_id\": string}",
                        report_json([] {
                          ValidationReport r;
                          r.add("missing_key", "city_id is required", "city_id");
                          return r;
                        }()));
    }
    const std::string city_id = body["city_id"].get<std::string>();
    auto city = find_city(city_id);
    if (!city) return send_error(res, 404, "unknown_city", "no city '" + city_id + "'");
    auto entry = sessions_.create(city_id, *city->city);
    persist(*entry);
    send(res, 201, {{"id", entry->session.id()}, {"city_id", city_id}});
  });

  srv.Get("/api/v1/sessions/:id", [this](const httplib::Request& req, httplib::Response& res) {
    auto entry = sessions_.find(req.path_params.at("id"));
    if (!entry) return send_error(res, 404, "unknown_session", "no such session");
    std::shared_lock lock(entry->mutex);
    send(res, 200, history_json(*entry));
  });

  srv.Delete("/api/v1/sessions/:id", [this](const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.path_params.at("id");
    if (!sessions_.erase(id)) return send_error(res, 404, "unknown_session", "no such session");
    if (options_.session_dir) {
      std::error_code ec;
      std::filesystem::remove(*options_.session_dir / (id + ".mobeq"), ec);
    }
    res.status = 204;
  });

  // Runs fn under the session's write lock and maps engine errors to statuses.
  auto mutate = [this](const httplib::Request& req, httplib::Response& res, auto&& fn) {
    auto entry = sessions_.find(req.path_params.at("id"));
    if (!entry) return send_error(res, 404, "unknown_session", "no such session");
    SolveOptions opts;
    opts.execution = options_.execution;
    opts.deadline = std::chrono::steady_clock::now() + options_.solve_timeout;
    ReportJsonOptions json_opts;
    json_opts.full_witnesses = false;
    json_opts.include_configuration = req.has_param("include") &&
                                      req.get_param_value("include") == "configuration";
    std::unique_lock lock(entry->mutex);
    try {
      const EquilibriumReport* report = fn(*entry, opts);
      persist(*entry);
      if (report) {
        send(res, 200, report_to_json(*report, entry->session.city(), json_opts));
      } else {
        send(res, 200, history_json(*entry));
      }
    } catch (const FormatError& e) {
      send_error(res, 422, "invalid_controls", e.what(), report_json(e.report()));
    } catch (const ValidationError& e) {
      send_error(res, 422, "invalid_controls", e.what(), report_json(e.report()));
    } catch (const PreconditionError& e) {
      send_error(res, 422, "precondition_failed", e.what());
    } catch (const IterationNotFound& e) {
      send_error(res, 409, "empty_session", e.what());
    } catch (const SolveTimeout& e) {
      send_error(res, 504, "solve_timeout", e.what());
    } catch (const SolverVerifierDisagreement& e) {
      send_error(res, 500, "solver_verifier_disagreement", e.what(),
                 {{"certificate", nash_to_json(e.certificate(), entry->session.city())},
                  {"feasibility", report_json(e.feasibility())}});
    }
  };

  srv.Post("/api/v1/sessions/:id/iterations",
           [mutate](const httplib::Request& req, httplib::Response& res) {
             mutate(req, res, [&](SessionStore::Entry& entry, const SolveOptions& opts) {
               const ScenarioControls controls =
                   controls_from_json(parse_document(req.body), entry.session.city());
               return &entry.session.run_iteration(controls, opts);
             });
           });

  srv.Post("/api/v1/sessions/:id/rerun",
           [mutate](const httplib::Request& req, httplib::Response& res) {
             mutate(req, res, [&](SessionStore::Entry& entry, const SolveOptions& opts) {
               return &entry.session.rerun(opts);
             });
           });

  srv.Post("/api/v1/sessions/:id/reset",
           [mutate](const httplib::Request& req, httplib::Response& res) {
             mutate(req, res, [&](SessionStore::Entry& entry, const SolveOptions&) {
               entry.session.reset();
               return static_cast<const EquilibriumReport*>(nullptr);
             });
           });

  srv.Get("/api/v1/sessions/:id/diff", [this](const httplib::Request& req, httplib::Response& res) {
    auto entry = sessions_.find(req.path_params.at("id"));
    if (!entry) return send_error(res, 404, "unknown_session", "no such session");
    const auto a = parse_index(req.get_param_value("a"));
    const auto b = parse_index(req.get_param_value("b"));
    if (!a || !b) {
      ValidationReport r;
      if (!a) r.add("invalid_index", "a must be a positive integer", "a");
      if (!b) r.add("invalid_index", "b must be a positive integer", "b");
      return send_error(res, 422, "invalid_query", "a and b are required", report_json(r));
    }
    std::shared_lock lock(entry->mutex);
    try {
      const IterationDiff diff = entry->session.diff(*a, *b);
      send(res, 200, kpi_delta_to_json(diff, entry->session.city()));
    } catch (const IterationNotFound& e) {
      send_error(res, 404, "unknown_iteration", e.what());
    }
  });
}

}  // namespace mobeq
