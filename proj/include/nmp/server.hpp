#pragma once

#include <atomic>
#include <cstdint>
#include <list>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>

#include "nmp/environment.hpp"
#include "nmp/io.hpp"

namespace nmp {

/// Per-connection state: at most one environment and the response counter.
struct ServerSession {
  std::optional<Environment> env;
  std::uint64_t seq = 0;
  bool closed = false;
};

/// Answers one request line. Never throws; failures come back as
/// {"ok": false, "error": {"code", "message"}} and leave the session usable.
std::string handle_request(ServerSession& session, const std::string& line);

io::Json state_to_json(const State& s, const ArmGeometry& arm);
io::Json goal_to_json(const GoalValue& g);
io::Json transition_to_json(const Transition& tr, const ArmGeometry& arm);

struct ServerOptions {
  std::string host = "127.0.0.1";
  int port = 5757;  // 0 picks a free port
  int max_sessions = 16;

  /// "host:port" or ":port".
  static ServerOptions parse_address(const std::string& addr);
  /// Applies NMP_SERVE_ADDR and NMP_MAX_SESSIONS when set.
  void apply_env();
};

/// Accept loop on a local stream socket, one thread per connection.
class Server {
 public:
  explicit Server(ServerOptions options);
  ~Server();
  Server(const Server&) = delete;
  Server& operator=(const Server&) = delete;

  /// Binds and starts accepting in the background. Throws BindError.
  void start();
  /// Bound port, valid after start().
  int port() const { return port_; }
  void shutdown();
  /// Blocks until shutdown() is called from another thread.
  void wait();
  int active_sessions() const { return active_.load(); }

 private:
  void accept_loop();
  void run_session(int fd);

  ServerOptions options_;
  int listen_fd_ = -1;
  int port_ = 0;
  std::atomic<bool> stopping_{false};
  std::atomic<int> active_{0};
  std::thread acceptor_;
  std::mutex mutex_;
  std::list<std::thread> workers_;
  std::list<int> client_fds_;
};

/// Blocking helper for the CLI.
void serve(const ServerOptions& options);

}  // namespace nmp
