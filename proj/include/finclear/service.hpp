#pragma once

#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>

#include "finclear/document.hpp"
#include "finclear/solver.hpp"

namespace httplib {
class Server;
}

namespace finclear {

struct ApiResponse {
  int status = 200;
  Json body;
};

struct ServiceOptions {
  SolverConfig solver;
  /// When set, every session is written to <dir>/<id>.json after each change
  /// and sessions found there are restored on startup.
  std::optional<std::string> snapshot_dir;
};

/// The HTTP API as plain methods; bind() attaches them to an httplib server.
/// Error statuses: 400 malformed request, 404 unknown id or name, 409 action
/// not applicable, 422 validation failure, 503 solver capability.
class Service {
 public:
  explicit Service(ServiceOptions options = {});
  ~Service();
  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  ApiResponse create_system(const std::string& body);
  ApiResponse get_system(const std::string& id);
  ApiResponse solutions(const std::string& id, bool all);
  ApiResponse preview(const std::string& id, const std::string& body);
  ApiResponse commit(const std::string& id, const std::string& body);
  ApiResponse undo(const std::string& id);
  ApiResponse list_scenarios();
  ApiResponse create_scenario(const std::string& name, const std::string& body);
  ApiResponse game_matrix(const std::string& name, const std::map<std::string, std::string>& query);
  ApiResponse auction_step(const std::string& id, const std::string& body);

  void bind(httplib::Server& server);

  std::size_t session_count() const;

 private:
  struct Session;
  std::shared_ptr<Session> find(const std::string& id) const;
  std::string insert(std::shared_ptr<Session> session);
  void snapshot(const std::string& id, const Session& session) const;
  void restore();

  ServiceOptions options_;
  mutable std::shared_mutex mutex_;
  std::map<std::string, std::shared_ptr<Session>> sessions_;
  std::size_t next_id_ = 1;
};

/// Blocks serving the API until the process is stopped. Returns nonzero when
/// the socket cannot be bound.
int serve(const std::string& host, int port, ServiceOptions options);

}  // namespace finclear
