#pragma once

#include <atomic>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <functional>
#include <future>
#include <mutex>
#include <string>
#include <thread>

#include "smdt/scenario.hpp"
#include "smdt/twin.hpp"

namespace smdt {

/// Cloud role over line-delimited JSON. Requests:
///   {"type":"sensor_update","source":{"kind":"rsu","id":1},"time_s":..,"links":[..],"nodes":[..]}
///   {"type":"route_request","vehicle":7,"position":1,"destination":4}
/// Each request line yields exactly one response line: "ack",
/// "route_response" or {"type":"error","code":..,"detail":..}.
class ServiceCore {
 public:
  explicit ServiceCore(const SimulationScenario& scenario);

  /// Not thread-safe; callers serialize through CommandQueue.
  std::string handle_line(const std::string& line);

  const TwinState& twin() const { return twin_; }

 private:
  Json sensor_update(const Json& msg);
  Json route_request(const Json& msg);
  SensingSource source_of(const Json& src) const;

  std::shared_ptr<const TrafficNetwork> net_;
  std::vector<RsuPlacement> rsus_;
  TwinState twin_;
};

/// Runs submitted commands one at a time, in submission order, on a single
/// worker thread.
class CommandQueue {
 public:
  explicit CommandQueue(std::function<std::string(const std::string&)> handler);
  ~CommandQueue();
  CommandQueue(const CommandQueue&) = delete;
  CommandQueue& operator=(const CommandQueue&) = delete;

  std::future<std::string> submit(std::string line);

 private:
  struct Item {
    std::string line;
    std::promise<std::string> reply;
  };

  std::function<std::string(const std::string&)> handler_;
  std::mutex mutex_;
  std::condition_variable cv_;
  std::deque<Item> items_;
  bool stopping_ = false;
  std::thread worker_;
};

/// Plain TCP listener; one thread per connection, all commands funnelled
/// through one CommandQueue.
class LineServer {
 public:
  /// Binds 127.0.0.1:`port` (0 picks a free port). Throws Error on failure.
  LineServer(CommandQueue& queue, std::uint16_t port, bool loopback_only = true);
  ~LineServer();
  LineServer(const LineServer&) = delete;
  LineServer& operator=(const LineServer&) = delete;

  std::uint16_t port() const { return port_; }
  /// Accepts connections until stop() is called.
  void serve();
  void stop();

 private:
  void handle_connection(int fd);

  CommandQueue& queue_;
  int listen_fd_ = -1;
  std::uint16_t port_ = 0;
  std::atomic<bool> stopping_{false};
  std::mutex conn_mutex_;
  std::vector<std::thread> connections_;
  std::vector<int> open_fds_;
};

}  // namespace smdt
