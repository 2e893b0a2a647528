#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#include "hasod/errors.hpp"
#include "hasod/session.hpp"

namespace httplib {
class Server;
}

namespace hasod {

struct ApiReply {
  int status = 200;
  std::string body;  // JSON
};

// Session store backed by one JSON file per session in `dir`. Mutations of a
// session are serialized by a per-id lock and flushed to disk before returning.
class SessionService {
 public:
  explicit SessionService(std::filesystem::path dir);

  ApiReply create(const std::string& body);
  ApiReply list();
  ApiReply get(const std::string& id);
  ApiReply batch(const std::string& id);
  ApiReply respond(const std::string& id, const std::string& body);
  ApiReply report(const std::string& id);
  ApiReply screening(const std::string& id);
  ApiReply surface(const std::string& id, const std::string& x_param);

  // Registers the /api routes (and CORS preflight) on `server`.
  void mount(httplib::Server& server);

  const std::filesystem::path& dir() const { return dir_; }

 private:
  std::filesystem::path session_path(const std::string& id) const;
  std::filesystem::path meta_path(const std::string& id) const;
  std::shared_ptr<std::mutex> lock_for(const std::string& id);
  SessionState load(const std::string& id) const;
  Json summary(const std::string& id, const SessionState& state) const;
  std::string new_id();

  std::filesystem::path dir_;
  std::mutex registry_mutex_;
  std::map<std::string, std::shared_ptr<std::mutex>> locks_;
  std::uint64_t id_counter_ = 0;
};

// HTTP status for a domain error code.
int http_status(ErrorCode code);

// Blocks serving on host:port until the process is stopped.
int serve(const std::string& host, int port, const std::filesystem::path& sessions_dir);

}  // namespace hasod
