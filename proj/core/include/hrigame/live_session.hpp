#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "hrigame/controllers.hpp"
#include "hrigame/simulation.hpp"

namespace hrigame {

struct LiveConfig {
  double tick_rate_hz = 250.0;
  /// Telemetry is published every this many ticks (50 Hz at the default rate).
  int telemetry_decimation = 5;
  /// Live force is held this long after receipt, then ramps to zero over `decay_time`.
  double hold_time = 0.2;
  double decay_time = 0.1;
  /// Per-component clamp on live human force, N.
  double force_limit = 50.0;

  double dt() const { return 1.0 / tick_rate_hz; }
};

enum class HumanMode { modeled, live };

struct Telemetry {
  std::uint64_t tick = 0;
  double time = 0.0;
  Eigen::VectorXd pos;
  Eigen::VectorXd vel;
  Eigen::VectorXd u_h;
  Eigen::VectorXd u_r;
  Eigen::VectorXd u_h_nominal;
  std::optional<Eigen::VectorXd> z_ref;
};

struct GainsChanged {
  Eigen::MatrixXd k_h;
  Eigen::MatrixXd k_r;
  std::optional<Eigen::VectorXd> z_ref;
  double alpha = 0.0;
  ControllerKind controller = ControllerKind::cgt;
};

struct ErrorMessage {
  std::string text;
};

struct ApplyForce {
  Eigen::VectorXd force;
};
struct SetAlpha {
  double alpha = 0.0;
};
struct SetController {
  ControllerKind controller = ControllerKind::cgt;
};
struct Reset {};

using ClientCommand = std::variant<ApplyForce, SetAlpha, SetController, Reset>;
using ServerEvent = std::variant<Telemetry, GainsChanged, ErrorMessage>;

/// A command applied just before the tick with index `tick` was integrated.
struct TimedCommand {
  std::uint64_t tick = 0;
  ClientCommand command;
};

/// Authoritative state of one human-in-the-loop session. Not thread-safe: a single loop
/// owns it and feeds it commands between ticks.
class LiveSession {
 public:
  /// Validates the scenario and synthesizes its controller. The session integrates at the
  /// configured tick rate, which replaces the scenario's dt.
  static LiveSession start(Scenario scenario, LiveConfig config = {});

  const Scenario& scenario() const { return scenario_; }
  const LiveConfig& config() const { return config_; }
  const GameSolution& solution() const { return solution_; }
  const State& state() const { return state_; }
  std::uint64_t tick() const { return tick_; }
  double time() const { return static_cast<double>(tick_) * dt_; }
  double dt() const { return dt_; }
  HumanMode mode() const { return mode_; }
  bool closed() const { return closed_; }

  GainsChanged gains() const;

  /// Sample at the current state without advancing.
  Telemetry peek() const;
  /// Returns the sample at the current state, then integrates one tick.
  Telemetry advance();

  /// Holds `force` (clamped) as the human input from `timestamp` (session time, s) on and
  /// switches the session to live-human mode. Throws StaleSessionError after close().
  void apply_human_force(const Eigen::Ref<const Eigen::VectorXd>& force, double timestamp);
  /// Live force in effect at session time `time`.
  Eigen::VectorXd held_force(double time) const;

  /// Re-synthesizes with the new weight. On failure the previous gains stay active and the
  /// error propagates.
  GainsChanged set_alpha(double alpha);
  GainsChanged set_controller(ControllerKind kind);
  /// Back to the initial state, tick 0 and modeled-human mode.
  void reset();
  void close() { closed_ = true; }

  /// Applies a client command at the current time. Returns the messages it produces: a
  /// gains_changed on successful re-synthesis or an error describing the rejection.
  std::vector<ServerEvent> handle(const ClientCommand& command);

 private:
  LiveSession(Scenario scenario, LiveConfig config, GameSolution solution);
  Telemetry sample() const;
  void require_open() const;

  Scenario scenario_;
  LiveConfig config_;
  GameSolution solution_;
  StateSpace plant_;
  double dt_;
  State state_;
  std::uint64_t tick_ = 0;
  HumanMode mode_ = HumanMode::modeled;
  Eigen::VectorXd live_force_;
  double live_force_time_ = 0.0;
  bool closed_ = false;
};

/// Runs a fresh session for `ticks` ticks, applying each recorded command before its tick,
/// and returns every tick's telemetry.
std::vector<Telemetry> replay(const Scenario& scenario, const LiveConfig& config,
                              const std::vector<TimedCommand>& trace, std::uint64_t ticks);

}  // namespace hrigame
