#pragma once

#include <filesystem>
#include <memory>
#include <string>

namespace httplib {
class Server;
}

namespace tilechain {

struct ServiceConfig {
  std::filesystem::path data_dir = ".";
  std::string cors_origin = "*";
};

/// HTTP/JSON facade over analyst sessions. Sessions live in memory; each
/// serializes its evaluations and updates (a concurrent request gets 409)
/// while read-only queries proceed freely. Global-score evaluations run as
/// background jobs polled through /sessions/{id}/jobs/{job}.
class ApiService {
 public:
  explicit ApiService(ServiceConfig config);
  ~ApiService();
  ApiService(const ApiService&) = delete;
  ApiService& operator=(const ApiService&) = delete;

  /// Registers every route, CORS headers and the error handler.
  void mount(httplib::Server& server);

  /// Waits for outstanding background jobs.
  void drain();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace tilechain
