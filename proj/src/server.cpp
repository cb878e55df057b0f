#include "nmp/server.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstdlib>
#include <cstring>
#include <iostream>

#include "nmp/errors.hpp"
#include "nmp/sensors.hpp"
#include "nmp/task_suite.hpp"

namespace nmp {

namespace {

using io::Json;

struct ProtocolError {
  std::string code;
  std::string message;
};

[[noreturn]] void fail(std::string code, std::string message) { throw ProtocolError{std::move(code), std::move(message)}; }

template <int N>
Eigen::Matrix<double, N, 1> vec_field(const Json& req, const std::string& field) {
  if (!req.contains(field)) fail("MISSING_FIELD", "missing field '" + field + "'");
  const Json& arr = req.at(field);
  if (!arr.is_array()) fail("BAD_FIELD", "field '" + field + "' must be an array");
  if (arr.size() != static_cast<std::size_t>(N)) {
    fail("BAD_DIM", "field '" + field + "' needs " + std::to_string(N) + " numbers, got " + std::to_string(arr.size()));
  }
  Eigen::Matrix<double, N, 1> v;
  for (int i = 0; i < N; ++i) {
    if (!arr[i].is_number()) fail("BAD_FIELD", "field '" + field + "' has a non-numeric element");
    v[i] = arr[i].get<double>();
  }
  return v;
}

Environment& need_env(ServerSession& s) {
  if (!s.env) fail("NO_ENV", "call make before this op");
  return *s.env;
}

Json obstacles_json(const Scene& scene) {
  Json arr = Json::array();
  for (const auto& o : scene.obstacles) {
    Json rec;
    if (const auto* b = std::get_if<Box>(&o.shape)) {
      rec = {{"type", "box"}, {"center", io::to_json<3>(b->center)}, {"half_extents", io::to_json<3>(b->half_extents)},
             {"yaw", b->yaw}};
    } else {
      const auto& p = std::get<Plane>(o.shape);
      rec = {{"type", "plane"}, {"normal", io::to_json<3>(p.normal)}, {"offset", p.offset}};
    }
    rec["label"] = o.label == ObstacleLabel::Static ? "static" : "varying";
    arr.push_back(rec);
  }
  return arr;
}

Json spec_json() {
  const ArmGeometry& arm = *default_arm();
  const EngineParams defaults;
  Json tasks = Json::array();
  for (const TaskSpec& t : task_registry()) {
    tasks.push_back({{"name", t.name},
                     {"sampled_scene", t.sampler.has_value()},
                     {"horizon", t.horizon},
                     {"stop_on_collision", t.stop_on_collision},
                     {"goal_representation", to_string(t.goal_spec.representation)}});
  }
  return {{"protocol_version", 1},
          {"dof", kDof},
          {"tasks", tasks},
          {"action_bound", defaults.action_bound},
          {"horizon", defaults.horizon},
          {"ee_tolerance", defaults.goal.ee_tolerance},
          {"config_tolerance", defaults.goal.config_tolerance},
          {"joint_lower", io::to_json<7>(arm.limits.lower)},
          {"joint_upper", io::to_json<7>(arm.limits.upper)}};
}

Json reset_payload(Environment& env) {
  const auto& arm = *env.scene().arm;
  Json out = {{"state", state_to_json(env.engine().state(), arm)}, {"goal", goal_to_json(env.engine().goal())}};
  if (env.query()) out["query"] = query_to_json(*env.query());
  return out;
}

Json dispatch(ServerSession& session, const Json& req) {
  if (!req.is_object()) fail("BAD_REQUEST", "request must be a JSON object");
  if (!req.contains("op") || !req.at("op").is_string()) fail("BAD_REQUEST", "request needs a string 'op'");
  const std::string op = req.at("op").get<std::string>();

  if (op == "spec") return spec_json();

  if (op == "make") {
    if (!req.contains("task") || !req.at("task").is_string()) fail("MISSING_FIELD", "make needs a string 'task'");
    std::uint64_t seed = 0;
    if (req.contains("seed")) {
      if (!req.at("seed").is_number_unsigned()) fail("BAD_FIELD", "seed must be a non-negative integer");
      seed = req.at("seed").get<std::uint64_t>();
    }
    const TaskSpec& task = find_task(req.at("task").get<std::string>());
    EngineParams params = EngineParams::from_task(task);
    if (req.contains("goal_representation")) {
      params.goal.representation = parse_goal_representation(req.at("goal_representation").get<std::string>());
    }
    if (req.contains("stop_on_collision")) params.stop_on_collision = req.at("stop_on_collision").get<bool>();
    if (req.contains("absorbing")) params.absorbing = req.at("absorbing").get<bool>();
    session.env.emplace(task, seed, params);
    return {{"task", task.name}, {"seed", seed}, {"scene", obstacles_json(session.env->scene())}};
  }

  if (op == "reset") {
    Environment& env = need_env(session);
    if (req.contains("query")) {
      env.reset(query_from_json(req.at("query")));
    } else {
      env.reset();
    }
    Json out = reset_payload(env);
    if (env.task().sampler) out["scene"] = obstacles_json(env.scene());
    return out;
  }

  if (op == "reset_specific") {
    Environment& env = need_env(session);
    const Configuration c{vec_field<7>(req, "config")};
    std::optional<Configuration> goal;
    if (req.contains("goal")) goal = Configuration{vec_field<7>(req, "goal")};
    env.reset_specific(c, goal);
    return reset_payload(env);
  }

  if (op == "step") {
    Environment& env = need_env(session);
    const Vec7 action = vec_field<7>(req, "action");
    ActionMode mode = ActionMode::Relative;
    if (req.contains("mode")) {
      const std::string m = req.at("mode").get<std::string>();
      if (m == "subgoal") {
        mode = ActionMode::Subgoal;
      } else if (m != "relative") {
        fail("BAD_FIELD", "mode must be 'relative' or 'subgoal'");
      }
    }
    return transition_to_json(env.step(action, mode), *env.scene().arm);
  }

  if (op == "sense") {
    Environment& env = need_env(session);
    SensorRig rig = SensorRig::cardinal();
    if (req.contains("rays_per_sensor")) rig.rays_per_sensor = req.at("rays_per_sensor").get<int>();
    if (rig.rays_per_sensor < 1) fail("BAD_FIELD", "rays_per_sensor must be >= 1");
    const bool with_robot = req.value("with_robot", true);
    std::optional<Configuration> c;
    if (with_robot) c = denormalize(env.engine().state().s, env.scene().arm->limits);
    const LabeledPointCloud cloud = sense(env.scene(), c, rig);
    Json pts = Json::array();
    for (const auto& p : cloud.points) {
      pts.push_back({p.position.x(), p.position.y(), p.position.z(), to_string(p.label), p.sensor});
    }
    return {{"points", pts}};
  }

  if (op == "close") {
    session.closed = true;
    return Json::object();
  }

  fail("UNKNOWN_OP", "unknown op '" + op + "'");
}

}  // namespace

io::Json state_to_json(const State& s, const ArmGeometry& arm) {
  return {{"s", io::to_json<7>(s.s.s)},
          {"q", io::to_json<7>(denormalize(s.s, arm.limits).q)},
          {"velocity", io::to_json<7>(s.velocity)},
          {"ee", io::to_json<3>(s.ee)},
          {"absorbed", s.absorbed}};
}

io::Json goal_to_json(const GoalValue& g) {
  return {{"config", g.config_target ? io::to_json<7>(*g.config_target) : Json(nullptr)},
          {"ee", g.ee_target ? io::to_json<3>(*g.ee_target) : Json(nullptr)}};
}

io::Json transition_to_json(const Transition& tr, const ArmGeometry& arm) {
  return {{"state", state_to_json(tr.next_state, arm)},
          {"cost", tr.cost},
          {"done", tr.done},
          {"t", tr.t},
          {"goal_reached", tr.goal_reached},
          {"collided", tr.collided_during_step}};
}

std::string handle_request(ServerSession& session, const std::string& line) {
  Json resp;
  try {
    Json req;
    try {
      req = Json::parse(line);
    } catch (const Json::parse_error& e) {
      fail("BAD_JSON", e.what());
    }
    resp = dispatch(session, req);
    resp["ok"] = true;
  } catch (const ProtocolError& e) {
    resp = {{"ok", false}, {"error", {{"code", e.code}, {"message", e.message}}}};
  } catch (const std::exception& e) {
    std::string code = "INTERNAL";
    if (dynamic_cast<const UnknownTask*>(&e)) code = "UNKNOWN_TASK";
    else if (dynamic_cast<const OutOfLimits*>(&e)) code = "OUT_OF_LIMITS";
    else if (dynamic_cast<const InfeasibleQuery*>(&e)) code = "INFEASIBLE_QUERY";
    else if (dynamic_cast<const EpisodeFinished*>(&e)) code = "EPISODE_FINISHED";
    else if (dynamic_cast<const MissingGoalField*>(&e)) code = "MISSING_GOAL";
    else if (dynamic_cast<const InvalidArgument*>(&e)) code = "INVALID_ARGUMENT";
    else if (dynamic_cast<const ParseError*>(&e)) code = "BAD_FIELD";
    else if (dynamic_cast<const Json::exception*>(&e)) code = "BAD_FIELD";
    resp = {{"ok", false}, {"error", {{"code", code}, {"message", e.what()}}}};
  }
  resp["seq"] = session.seq++;
  return resp.dump();
}

// ---------------------------------------------------------------------------

ServerOptions ServerOptions::parse_address(const std::string& addr) {
  ServerOptions o;
  const auto colon = addr.rfind(':');
  if (colon == std::string::npos) throw InvalidArgument("address must look like host:port");
  if (colon > 0) o.host = addr.substr(0, colon);
  try {
    std::size_t used = 0;
    o.port = std::stoi(addr.substr(colon + 1), &used);
    if (used != addr.size() - colon - 1) throw std::invalid_argument("trailing");
  } catch (const std::exception&) {
    throw InvalidArgument("bad port in address '" + addr + "'");
  }
  if (o.port < 0 || o.port > 65535) throw InvalidArgument("port out of range");
  return o;
}

void ServerOptions::apply_env() {
  if (const char* a = std::getenv("NMP_SERVE_ADDR")) {
    const ServerOptions parsed = parse_address(a);
    host = parsed.host;
    port = parsed.port;
  }
  if (const char* m = std::getenv("NMP_MAX_SESSIONS")) max_sessions = std::atoi(m);
}

Server::Server(ServerOptions options) : options_(std::move(options)) {
  if (options_.max_sessions < 1) throw InvalidArgument("max_sessions must be >= 1");
}

Server::~Server() { shutdown(); }

void Server::start() {
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw BindError(std::string("socket: ") + std::strerror(errno));
  int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(static_cast<std::uint16_t>(options_.port));
  if (::inet_pton(AF_INET, options_.host.c_str(), &addr.sin_addr) != 1) {
    ::close(listen_fd_);
    listen_fd_ = -1;
    throw BindError("not an IPv4 address: " + options_.host);
  }
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0 || ::listen(listen_fd_, 16) < 0) {
    const std::string msg = std::strerror(errno);
    ::close(listen_fd_);
    listen_fd_ = -1;
    throw BindError("cannot bind " + options_.host + ":" + std::to_string(options_.port) + ": " + msg);
  }
  socklen_t len = sizeof addr;
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
  acceptor_ = std::thread([this] { accept_loop(); });
}

void Server::accept_loop() {
  while (!stopping_) {
    const int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) {
      if (stopping_) break;
      if (errno == EINTR || errno == ECONNABORTED) continue;
      break;
    }
    if (active_ >= options_.max_sessions) {
      const std::string busy =
          Json({{"ok", false}, {"seq", 0}, {"error", {{"code", "BUSY"}, {"message", "session limit reached"}}}}).dump() +
          "\n";
      (void)!::send(fd, busy.data(), busy.size(), MSG_NOSIGNAL);
      ::close(fd);
      continue;
    }
    std::lock_guard lock(mutex_);
    ++active_;
    client_fds_.push_back(fd);
    workers_.emplace_back([this, fd] { run_session(fd); });
  }
}

void Server::run_session(int fd) {
  ServerSession session;
  std::string buffer;
  char chunk[4096];
  while (!session.closed) {
    const auto nl = buffer.find('\n');
    if (nl == std::string::npos) {
      const ssize_t n = ::recv(fd, chunk, sizeof chunk, 0);
      if (n <= 0) break;
      buffer.append(chunk, static_cast<std::size_t>(n));
      continue;
    }
    std::string line = buffer.substr(0, nl);
    buffer.erase(0, nl + 1);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::string resp = handle_request(session, line) + "\n";
    std::size_t sent = 0;
    while (sent < resp.size()) {
      const ssize_t n = ::send(fd, resp.data() + sent, resp.size() - sent, MSG_NOSIGNAL);
      if (n <= 0) {
        session.closed = true;
        break;
      }
      sent += static_cast<std::size_t>(n);
    }
  }
  {
    std::lock_guard lock(mutex_);
    client_fds_.remove(fd);
  }
  ::close(fd);
  --active_;
}

void Server::shutdown() {
  if (stopping_.exchange(true)) {
    return;
  }
  if (listen_fd_ >= 0) {
    ::shutdown(listen_fd_, SHUT_RDWR);
    ::close(listen_fd_);
  }
  if (acceptor_.joinable()) acceptor_.join();
  std::list<std::thread> workers;
  {
    std::lock_guard lock(mutex_);
    for (int fd : client_fds_) ::shutdown(fd, SHUT_RDWR);
    workers.swap(workers_);
  }
  for (auto& t : workers) t.join();
  listen_fd_ = -1;
}

void Server::wait() {
  while (!stopping_) std::this_thread::sleep_for(std::chrono::milliseconds(100));
}

void serve(const ServerOptions& options) {
  Server server(options);
  server.start();
  std::cerr << "serving on " << options.host << ":" << server.port() << "\n";
  server.wait();
}

}  // namespace nmp
