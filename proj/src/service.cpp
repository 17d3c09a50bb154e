#include "smdt/service.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <sys/socket.h>
#include <unistd.h>

#include <algorithm>
#include <cerrno>
#include <cstring>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "smdt/error.hpp"
#include "smdt/nav.hpp"

namespace smdt {
namespace {

// Raised while handling a message; becomes one error response.
struct RequestError {
  std::string code;
  std::string detail;
};

Json error_json(const std::string& code, const std::string& detail) {
  return Json{{"type", "error"}, {"code", code}, {"detail", detail}};
}

const Json& field(const Json& msg, const char* key) {
  auto it = msg.find(key);
  if (it == msg.end()) throw RequestError{"bad_request", fmt::format("missing field '{}'", key)};
  return *it;
}

double number(const Json& msg, const char* key) {
  const Json& v = field(msg, key);
  if (!v.is_number()) throw RequestError{"bad_request", fmt::format("field '{}' must be a number", key)};
  return v.get<double>();
}

int integer(const Json& msg, const char* key) {
  const Json& v = field(msg, key);
  if (!v.is_number_integer()) throw RequestError{"bad_request", fmt::format("field '{}' must be an integer", key)};
  return v.get<int>();
}

}  // namespace

ServiceCore::ServiceCore(const SimulationScenario& scenario)
    : net_(scenario.network), rsus_(scenario.rsus), twin_(scenario.network, scenario.thresholds) {}

SensingSource ServiceCore::source_of(const Json& src) const {
  if (!src.is_object()) throw RequestError{"bad_request", "'source' must be an object"};
  std::string kind = field(src, "kind").is_string() ? field(src, "kind").get<std::string>() : "";
  int id = integer(src, "id");
  if (kind == "cav") {
    const Json& link = field(src, "link");
    if (!link.is_array() || link.size() != 2 || !link[0].is_number_integer() || !link[1].is_number_integer()) {
      throw RequestError{"bad_request", "cav source needs 'link': [from, to]"};
    }
    auto l = net_->find_link(NodeId{link[0].get<int>()}, NodeId{link[1].get<int>()});
    if (!l) throw RequestError{"invalid_node", "cav source link is not in the network"};
    return SensingSource{SourceId{SourceKind::kCav, id}, cav_coverage(*net_, *l)};
  }
  if (kind != "rsu") throw RequestError{"bad_request", "source kind must be 'rsu' or 'cav'"};
  if (src.contains("node")) {
    NodeId n{integer(src, "node")};
    if (!net_->contains(n)) throw RequestError{"invalid_node", fmt::format("unknown node {}", n.value)};
    double radius = src.contains("radius_m") ? number(src, "radius_m") : 30.0;
    return SensingSource{SourceId{SourceKind::kRsu, id}, rsu_coverage(*net_, n, radius)};
  }
  if (id < 1 || static_cast<std::size_t>(id) > rsus_.size()) {
    throw RequestError{"bad_request", fmt::format("RSU {} is not deployed; give 'node' and 'radius_m'", id)};
  }
  const auto& r = rsus_[static_cast<std::size_t>(id - 1)];
  return SensingSource{SourceId{SourceKind::kRsu, id}, rsu_coverage(*net_, r.node, r.radius_m)};
}

Json ServiceCore::sensor_update(const Json& msg) {
  SensingSource source = source_of(field(msg, "source"));
  Observation obs;
  obs.time_s = number(msg, "time_s");
  if (msg.contains("links")) {
    for (const auto& l : msg["links"]) {
      auto id = net_->find_link(NodeId{integer(l, "from")}, NodeId{integer(l, "to")});
      if (!id) throw RequestError{"invalid_node", "observed link is not in the network"};
      LinkObservation o{*id, number(l, "volume"), number(l, "speed_mps"), false};
      o.occupied = l.contains("occupied") ? l["occupied"].get<bool>() : o.volume > 0.0;
      obs.links.push_back(o);
    }
  }
  if (msg.contains("nodes")) {
    for (const auto& n : msg["nodes"]) {
      NodeId id{integer(n, "id")};
      if (!net_->contains(id)) throw RequestError{"invalid_node", fmt::format("unknown node {}", id.value)};
      obs.nodes.push_back(NodeObservation{id, number(n, "ped_density")});
    }
  }
  try {
    twin_.ingest(source, obs, true);
  } catch (const ContractViolation& e) {
    throw RequestError{"uncovered", e.what()};
  }
  twin_.update_events();
  Json out = twin_snapshot_json(twin_, 0, obs.time_s);
  return Json{{"type", "ack"}, {"time_s", obs.time_s}, {"n_eve", out["n_eve"]}, {"l_eve", out["l_eve"]}};
}

Json ServiceCore::route_request(const Json& msg) {
  int vehicle = integer(msg, "vehicle");
  NodeId pos{integer(msg, "position")};
  NodeId dest{integer(msg, "destination")};
  for (NodeId n : {pos, dest}) {
    if (!net_->contains(n)) throw RequestError{"invalid_node", fmt::format("unknown node {}", n.value)};
  }
  if (pos == dest) throw RequestError{"degenerate_request", "position equals destination"};

  auto journey = build_journey_matrix(*net_, twin_volumes(twin_, *net_));
  auto masked = mask_events(std::move(journey), *net_, twin_.event_nodes(), twin_.event_links());
  auto path = dijkstra_fastest(masked, pos, dest);
  Json out{{"type", "route_response"}, {"vehicle", vehicle}};
  if (!path) {
    out["route"] = Json::array();
    out["status"] = "unreachable";
    return out;
  }
  Json route = Json::array();
  for (NodeId n : path->nodes) route.push_back(n.value);
  out["route"] = route;
  out["cost_s"] = path->cost.value();
  out["status"] = "ok";
  return out;
}

std::string ServiceCore::handle_line(const std::string& line) {
  Json msg = Json::parse(line, nullptr, false);
  if (msg.is_discarded()) return error_json("parse", "line is not valid JSON").dump();
  try {
    if (!msg.is_object() || !msg.contains("type") || !msg["type"].is_string()) {
      throw RequestError{"bad_request", "message must be an object with a string 'type'"};
    }
    auto type = msg["type"].get<std::string>();
    if (type == "sensor_update") return sensor_update(msg).dump();
    if (type == "route_request") return route_request(msg).dump();
    throw RequestError{"unknown_type", fmt::format("unknown message type '{}'", type)};
  } catch (const RequestError& e) {
    return error_json(e.code, e.detail).dump();
  } catch (const Json::exception& e) {
    return error_json("bad_request", e.what()).dump();
  }
}

CommandQueue::CommandQueue(std::function<std::string(const std::string&)> handler) : handler_(std::move(handler)) {
  worker_ = std::thread([this] {
    for (;;) {
      Item item;
      {
        std::unique_lock lock(mutex_);
        cv_.wait(lock, [this] { return stopping_ || !items_.empty(); });
        if (items_.empty()) return;
        item = std::move(items_.front());
        items_.pop_front();
      }
      try {
        item.reply.set_value(handler_(item.line));
      } catch (...) {
        item.reply.set_exception(std::current_exception());
      }
    }
  });
}

CommandQueue::~CommandQueue() {
  {
    std::lock_guard lock(mutex_);
    stopping_ = true;
  }
  cv_.notify_all();
  worker_.join();
}

std::future<std::string> CommandQueue::submit(std::string line) {
  Item item{std::move(line), {}};
  auto fut = item.reply.get_future();
  {
    std::lock_guard lock(mutex_);
    items_.push_back(std::move(item));
  }
  cv_.notify_one();
  return fut;
}

LineServer::LineServer(CommandQueue& queue, std::uint16_t port, bool loopback_only) : queue_(queue) {
  listen_fd_ = ::socket(AF_INET, SOCK_STREAM, 0);
  if (listen_fd_ < 0) throw Error(fmt::format("socket: {}", std::strerror(errno)));
  int one = 1;
  ::setsockopt(listen_fd_, SOL_SOCKET, SO_REUSEADDR, &one, sizeof one);
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_addr.s_addr = htonl(loopback_only ? INADDR_LOOPBACK : INADDR_ANY);
  addr.sin_port = htons(port);
  if (::bind(listen_fd_, reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0 || ::listen(listen_fd_, 16) < 0) {
    int err = errno;
    ::close(listen_fd_);
    throw Error(fmt::format("cannot listen on port {}: {}", port, std::strerror(err)));
  }
  socklen_t len = sizeof addr;
  ::getsockname(listen_fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  port_ = ntohs(addr.sin_port);
}

LineServer::~LineServer() {
  stop();
  for (auto& t : connections_) t.join();
}

void LineServer::stop() {
  if (stopping_.exchange(true)) return;
  ::shutdown(listen_fd_, SHUT_RDWR);
  ::close(listen_fd_);
  std::lock_guard lock(conn_mutex_);
  for (int fd : open_fds_) ::shutdown(fd, SHUT_RDWR);
}

void LineServer::serve() {
  spdlog::debug("listening on port {}", port_);
  while (!stopping_) {
    int fd = ::accept(listen_fd_, nullptr, nullptr);
    if (fd < 0) {
      if (stopping_) break;
      if (errno == EINTR) continue;
      throw Error(fmt::format("accept: {}", std::strerror(errno)));
    }
    std::lock_guard lock(conn_mutex_);
    open_fds_.push_back(fd);
    connections_.emplace_back([this, fd] { handle_connection(fd); });
  }
}

void LineServer::handle_connection(int fd) {
  std::string buffer;
  char chunk[4096];
  auto send_all = [fd](const std::string& s) {
    std::size_t sent = 0;
    while (sent < s.size()) {
      ssize_t n = ::send(fd, s.data() + sent, s.size() - sent, MSG_NOSIGNAL);
      if (n <= 0) return false;
      sent += static_cast<std::size_t>(n);
    }
    return true;
  };
  for (;;) {
    ssize_t n = ::recv(fd, chunk, sizeof chunk, 0);
    if (n <= 0) break;
    buffer.append(chunk, static_cast<std::size_t>(n));
    std::size_t nl;
    bool ok = true;
    while (ok && (nl = buffer.find('\n')) != std::string::npos) {
      std::string line = buffer.substr(0, nl);
      buffer.erase(0, nl + 1);
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      ok = send_all(queue_.submit(std::move(line)).get() + "\n");
    }
    if (!ok) break;
  }
  {
    std::lock_guard lock(conn_mutex_);
    std::erase(open_fds_, fd);
  }
  ::close(fd);
}

}  // namespace smdt
