#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "hrigame/live_session.hpp"

namespace hrigame {

struct ServerOptions {
  std::string address = "127.0.0.1";
  /// 0 picks a free port; the bound port is returned by LiveServer::port().
  std::uint16_t port = 8400;
  /// Scenario files offered by GET /scenarios and selectable with /session?scenario=NAME.
  std::filesystem::path scenario_dir = "scenarios";
  LiveConfig live;
  /// Stop on SIGINT or SIGTERM.
  bool stop_on_signal = false;
};

/// HTTP and WebSocket front end for live sessions.
///
///   GET /health                      {"status":"ok","sessions":N}
///   GET /scenarios                   {"scenarios":[names without .json]}
///   WS  /session?scenario=NAME       one LiveSession per connection
///
/// Every connection's session is stepped by a timer on the server's single I/O thread.
/// Incoming WebSocket frames are queued and applied between ticks, so the session is only
/// ever touched by its own tick handler. The first frame on a new session is gains_changed;
/// telemetry follows every `telemetry_decimation` ticks. A scenario that fails to load or
/// synthesize yields one error frame and a normal close.
class LiveServer {
 public:
  explicit LiveServer(ServerOptions options);
  ~LiveServer();
  LiveServer(const LiveServer&) = delete;
  LiveServer& operator=(const LiveServer&) = delete;

  /// Binds the listening socket. Throws IoError if the address cannot be bound.
  void listen();
  std::uint16_t port() const;
  /// Serves until stop() is called. Runs on the calling thread.
  void run();
  /// Thread-safe. Closes the listener and all sessions, then run() returns.
  void stop();

  struct Impl;  // opaque, defined with the connection handlers

 private:
  std::unique_ptr<Impl> impl_;
};

/// Scenario names available in `dir`, sorted.
std::vector<std::string> list_scenarios(const std::filesystem::path& dir);

}  // namespace hrigame
