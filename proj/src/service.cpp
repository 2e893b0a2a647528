#include "hasod/service.hpp"

#include <chrono>
#include <ctime>
#include <iostream>
#include <random>
#include <regex>
#include <sstream>

#include <httplib.h>

#include "hasod/errors.hpp"

namespace hasod {

namespace {

ApiReply json_reply(int status, const Json& body) { return {status, canonical_dump(body)}; }

ApiReply error_reply(int status, std::string_view name, const std::string& message) {
  return json_reply(status, Json{{"error", std::string(name)}, {"message", message}});
}

ApiReply error_reply(const Error& e) { return error_reply(http_status(e.code()), e.name(), e.what()); }

template <typename F>
ApiReply guarded(F&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    return error_reply(e);
  } catch (const Json::exception& e) {
    return error_reply(400, "MalformedInput", e.what());
  } catch (const std::exception& e) {
    return error_reply(500, "Internal", e.what());
  }
}

bool valid_id(const std::string& id) {
  static const std::regex re("^[A-Za-z0-9_-]{1,64}$");
  return std::regex_match(id, re);
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

Json parse_body(const std::string& body) {
  try {
    return Json::parse(body);
  } catch (const Json::exception& e) {
    throw Error(ErrorCode::MalformedInput, std::string("request body is not JSON: ") + e.what());
  }
}

}  // namespace

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnknownRowId:
    case ErrorCode::UnknownSession: return 404;
    case ErrorCode::DuplicateResponse: return 422;
    case ErrorCode::SessionComplete:
    case ErrorCode::NotComplete: return 409;
    case ErrorCode::IoError: return 500;
    default: return 400;
  }
}

SessionService::SessionService(std::filesystem::path dir) : dir_(std::move(dir)) {
  std::filesystem::create_directories(dir_);
}

std::filesystem::path SessionService::session_path(const std::string& id) const { return dir_ / (id + ".json"); }
std::filesystem::path SessionService::meta_path(const std::string& id) const { return dir_ / (id + ".meta"); }

std::shared_ptr<std::mutex> SessionService::lock_for(const std::string& id) {
  std::lock_guard<std::mutex> g(registry_mutex_);
  auto& m = locks_[id];
  if (!m) m = std::make_shared<std::mutex>();
  return m;
}

SessionState SessionService::load(const std::string& id) const {
  if (!valid_id(id) || !std::filesystem::exists(session_path(id))) {
    throw Error(ErrorCode::UnknownSession, "no session " + id);
  }
  return load_session(session_path(id));
}

Json SessionService::summary(const std::string& id, const SessionState& s) const {
  std::string created;
  if (std::filesystem::exists(meta_path(id))) created = read_file(meta_path(id));
  const std::size_t pending = s.phase == SessionPhase::Complete ? 0 : propose_runs(s).size();
  return Json{{"id", id},
              {"phase", std::string(to_string(s.phase))},
              {"k", s.config.k},
              {"pending_run_count", pending},
              {"created_at", created}};
}

std::string SessionService::new_id() {
  std::lock_guard<std::mutex> g(registry_mutex_);
  static thread_local std::mt19937_64 gen{std::random_device{}()};
  for (;;) {
    std::ostringstream ss;
    ss << std::hex << (gen() ^ ++id_counter_);
    const std::string id = "s" + ss.str();
    if (!std::filesystem::exists(session_path(id)) && !locks_.count(id)) {
      locks_[id] = std::make_shared<std::mutex>();
      return id;
    }
  }
}

ApiReply SessionService::create(const std::string& body) {
  return guarded([&] {
    const Json j = parse_body(body);
    if (!j.is_object() || !j.contains("k")) throw Error(ErrorCode::MalformedInput, "body needs at least {k}");
    for (auto it = j.begin(); it != j.end(); ++it) {
      if (it.key() != "k" && it.key() != "seed" && it.key() != "config") {
        throw Error(ErrorCode::MalformedInput, "unknown field " + it.key());
      }
    }
    SessionConfig cfg;
    if (j.contains("config")) cfg = session_config_from_json(j["config"], cfg);
    try {
      cfg.k = j.at("k").get<std::size_t>();
      cfg.seed = j.value("seed", cfg.seed);
    } catch (const Json::exception& e) {
      throw Error(ErrorCode::MalformedInput, e.what());
    }
    const SessionState s = create_session(cfg);
    const std::string id = new_id();
    auto lock = lock_for(id);
    std::lock_guard<std::mutex> g(*lock);
    write_file_atomic(meta_path(id), utc_now());
    save_session(s, session_path(id));
    return json_reply(201, summary(id, s));
  });
}

ApiReply SessionService::list() {
  return guarded([&] {
    std::vector<std::string> ids;
    for (const auto& e : std::filesystem::directory_iterator(dir_)) {
      if (e.path().extension() == ".json") ids.push_back(e.path().stem().string());
    }
    std::sort(ids.begin(), ids.end());
    Json out = Json::array();
    for (const auto& id : ids) {
      try {
        out.push_back(summary(id, load(id)));
      } catch (const Error&) {
        // unreadable files are skipped rather than failing the listing
      }
    }
    return json_reply(200, out);
  });
}

ApiReply SessionService::get(const std::string& id) {
  return guarded([&] {
    const SessionState s = load(id);
    return ApiReply{200, session_to_string(s)};
  });
}

ApiReply SessionService::batch(const std::string& id) {
  return guarded([&] {
    const SessionState s = load(id);
    Json runs = Json::array();
    for (const auto& r : propose_runs(s)) {
      runs.push_back(Json{{"row_id", r.row_id}, {"levels", vector_to_json(r.levels)}});
    }
    return json_reply(200, Json{{"phase", std::string(to_string(s.phase))}, {"runs", runs}});
  });
}

ApiReply SessionService::respond(const std::string& id, const std::string& body) {
  return guarded([&] {
    const Json j = parse_body(body);
    if (!j.is_array()) throw Error(ErrorCode::MalformedInput, "body must be a list of {row_id, y}");
    std::vector<Response> responses;
    for (const auto& e : j) {
      if (!e.is_object() || !e.contains("row_id") || !e.contains("y") || !e["y"].is_number() ||
          !e["row_id"].is_number_unsigned()) {
        throw Error(ErrorCode::MalformedInput, "each response needs an integer row_id and a numeric y");
      }
      responses.push_back({e["row_id"].get<std::size_t>(), e["y"].get<double>()});
    }
    if (!valid_id(id)) throw Error(ErrorCode::UnknownSession, "no session " + id);
    auto lock = lock_for(id);
    std::lock_guard<std::mutex> g(*lock);
    const SessionState before = load(id);
    const SessionState after = ingest_responses(before, responses);
    save_session(after, session_path(id));
    return json_reply(200, summary(id, after));
  });
}

ApiReply SessionService::report(const std::string& id) {
  return guarded([&] { return json_reply(200, to_json(finalize_report(load(id)))); });
}

ApiReply SessionService::screening(const std::string& id) {
  return guarded([&] {
    const SessionState s = load(id);
    if (!s.screening) return error_reply(404, "NotAvailable", "screening runs when Phase 1 is complete");
    return json_reply(200, to_json(*s.screening));
  });
}

ApiReply SessionService::surface(const std::string& id, const std::string& x_param) {
  return guarded([&] {
    const SessionState s = load(id);
    Vector x(static_cast<Eigen::Index>(s.config.k));
    std::stringstream ss(x_param);
    std::string item;
    std::size_t n = 0;
    while (std::getline(ss, item, ',')) {
      if (n >= s.config.k) throw Error(ErrorCode::MalformedInput, "x has more than k values");
      std::size_t used = 0;
      double v = 0.0;
      try {
        v = std::stod(item, &used);
      } catch (const std::logic_error&) {
        used = 0;
      }
      if (used == 0 || used != item.size() || !std::isfinite(v)) {
        throw Error(ErrorCode::MalformedInput, "cannot parse x value '" + item + "'");
      }
      x(static_cast<Eigen::Index>(n++)) = v;
    }
    if (n != s.config.k) throw Error(ErrorCode::MalformedInput, "x needs exactly k comma-separated values");
    const GPModel gp = current_gp(s);
    const GPPrediction p = gp_predict(gp, x);
    return json_reply(200, Json{{"mean", p.mean}, {"variance", p.variance}});
  });
}

void SessionService::mount(httplib::Server& server) {
  auto send = [](httplib::Response& res, const ApiReply& r) {
    res.status = r.status;
    res.set_content(r.body, "application/json");
  };
  auto json_body = [](const httplib::Request& req) {
    const std::string ct = req.get_header_value("Content-Type");
    return ct.rfind("application/json", 0) == 0;
  };
  auto bad_type = [send](httplib::Response& res) {
    send(res, error_reply(400, "MalformedInput", "Content-Type must be application/json"));
  };

  server.set_default_headers({{"Access-Control-Allow-Origin", "*"},
                              {"Access-Control-Allow-Methods", "GET, POST, OPTIONS"},
                              {"Access-Control-Allow-Headers", "Content-Type"}});
  server.Options(R"(/api/.*)", [](const httplib::Request&, httplib::Response& res) { res.status = 204; });

  server.Post("/api/sessions", [=, this](const httplib::Request& req, httplib::Response& res) {
    if (!json_body(req)) return bad_type(res);
    send(res, create(req.body));
  });
  server.Get("/api/sessions", [=, this](const httplib::Request&, httplib::Response& res) { send(res, list()); });
  server.Get(R"(/api/sessions/([^/]+))", [=, this](const httplib::Request& req, httplib::Response& res) {
    send(res, get(req.matches[1]));
  });
  server.Get(R"(/api/sessions/([^/]+)/batch)", [=, this](const httplib::Request& req, httplib::Response& res) {
    send(res, batch(req.matches[1]));
  });
  server.Post(R"(/api/sessions/([^/]+)/responses)", [=, this](const httplib::Request& req, httplib::Response& res) {
    if (!json_body(req)) return bad_type(res);
    send(res, respond(req.matches[1], req.body));
  });
  server.Get(R"(/api/sessions/([^/]+)/report)", [=, this](const httplib::Request& req, httplib::Response& res) {
    send(res, report(req.matches[1]));
  });
  server.Get(R"(/api/sessions/([^/]+)/screening)", [=, this](const httplib::Request& req, httplib::Response& res) {
    send(res, screening(req.matches[1]));
  });
  server.Get(R"(/api/sessions/([^/]+)/surface)", [=, this](const httplib::Request& req, httplib::Response& res) {
    if (!req.has_param("x")) return send(res, error_reply(400, "MalformedInput", "missing x query parameter"));
    send(res, surface(req.matches[1], req.get_param_value("x")));
  });
}

int serve(const std::string& host, int port, const std::filesystem::path& sessions_dir) {
  SessionService service(sessions_dir);
  httplib::Server server;
  service.mount(server);
  std::cout << "serving " << sessions_dir.string() << " on http://" << host << ":" << port << std::endl;
  if (!server.listen(host, port)) {
    throw Error(ErrorCode::IoError, "cannot listen on " + host + ":" + std::to_string(port));
  }
  return 0;
}

}  // namespace hasod
