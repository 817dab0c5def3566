#include "hrigame/live_session.hpp"

#include <cmath>
#include <string>
#include <utility>

#include "hrigame/errors.hpp"

namespace hrigame {

LiveSession::LiveSession(Scenario scenario, LiveConfig config, GameSolution solution)
    : scenario_(std::move(scenario)),
      config_(config),
      solution_(std::move(solution)),
      plant_(build_state_space(scenario_.plant)),
      dt_(config_.dt()),
      state_(scenario_.initial_state),
      live_force_(Eigen::VectorXd::Zero(scenario_.plant.dofs())) {}

LiveSession LiveSession::start(Scenario scenario, LiveConfig config) {
  if (!(config.tick_rate_hz > 0.0) || config.telemetry_decimation < 1 || !(config.hold_time >= 0.0) ||
      !(config.decay_time >= 0.0) || !(config.force_limit > 0.0)) {
    throw ValidationError("invalid live session configuration");
  }
  scenario.dt = config.dt();
  if (scenario.duration < scenario.dt) scenario.duration = scenario.dt;
  scenario.validate();
  const StateSpace ss = build_state_space(scenario.plant);
  GameSolution solution = synthesize(scenario.controller, ss, scenario.alpha, scenario.human,
                                     scenario.robot, scenario.refs);
  return LiveSession(std::move(scenario), config, std::move(solution));
}

GainsChanged LiveSession::gains() const {
  return {solution_.k_h, solution_.k_r, solution_.z_ref, scenario_.alpha, scenario_.controller};
}

void LiveSession::require_open() const {
  if (closed_) throw StaleSessionError("session is closed");
}

Eigen::VectorXd LiveSession::held_force(double time) const {
  if (mode_ != HumanMode::live) return Eigen::VectorXd::Zero(live_force_.size());
  const double age = time - live_force_time_;
  if (age <= config_.hold_time) return live_force_;
  const double into_decay = age - config_.hold_time;
  if (into_decay >= config_.decay_time) return Eigen::VectorXd::Zero(live_force_.size());
  return live_force_ * (1.0 - into_decay / config_.decay_time);
}

Telemetry LiveSession::sample() const {
  Telemetry t;
  t.tick = tick_;
  t.time = time();
  t.pos = state_.pos;
  t.vel = state_.vel;
  t.u_h_nominal = control_action(solution_.k_h, state_, solution_.ref_h);
  t.u_r = control_action(solution_.k_r, state_, solution_.ref_r);
  t.u_h = mode_ == HumanMode::live ? held_force(t.time) : t.u_h_nominal;
  t.z_ref = solution_.z_ref;
  return t;
}

Telemetry LiveSession::peek() const { return sample(); }

Telemetry LiveSession::advance() {
  require_open();
  Telemetry t = sample();
  const InputLaw human = mode_ == HumanMode::live
                             ? InputLaw::held(t.u_h)
                             : InputLaw::feedback(solution_.k_h, solution_.ref_h);
  state_ = step(plant_, state_, human, InputLaw::feedback(solution_.k_r, solution_.ref_r), dt_);
  ++tick_;
  return t;
}

void LiveSession::apply_human_force(const Eigen::Ref<const Eigen::VectorXd>& force,
                                    double timestamp) {
  require_open();
  if (force.size() != live_force_.size()) {
    throw ValidationError("force must have " + std::to_string(live_force_.size()) + " components");
  }
  if (!force.allFinite() || !std::isfinite(timestamp)) {
    throw ValidationError("force and timestamp must be finite");
  }
  live_force_ = force.cwiseMax(-config_.force_limit).cwiseMin(config_.force_limit);
  live_force_time_ = timestamp;
  mode_ = HumanMode::live;
}

GainsChanged LiveSession::set_alpha(double alpha) {
  require_open();
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw DomainError("alpha must lie in the open interval (0, 1), got " + std::to_string(alpha));
  }
  GameSolution next = synthesize(scenario_.controller, plant_, alpha, scenario_.human,
                                 scenario_.robot, scenario_.refs);
  scenario_.alpha = alpha;
  solution_ = std::move(next);
  return gains();
}

GainsChanged LiveSession::set_controller(ControllerKind kind) {
  require_open();
  GameSolution next =
      synthesize(kind, plant_, scenario_.alpha, scenario_.human, scenario_.robot, scenario_.refs);
  scenario_.controller = kind;
  solution_ = std::move(next);
  return gains();
}

void LiveSession::reset() {
  require_open();
  state_ = scenario_.initial_state;
  tick_ = 0;
  mode_ = HumanMode::modeled;
  live_force_.setZero();
  live_force_time_ = 0.0;
}

std::vector<ServerEvent> LiveSession::handle(const ClientCommand& command) {
  require_open();
  try {
    return std::visit(
        [&](const auto& cmd) -> std::vector<ServerEvent> {
          using T = std::decay_t<decltype(cmd)>;
          if constexpr (std::is_same_v<T, ApplyForce>) {
            apply_human_force(cmd.force, time());
            return {};
          } else if constexpr (std::is_same_v<T, SetAlpha>) {
            return {set_alpha(cmd.alpha)};
          } else if constexpr (std::is_same_v<T, SetController>) {
            return {set_controller(cmd.controller)};
          } else {
            reset();
            return {};
          }
        },
        command);
  } catch (const StaleSessionError&) {
    throw;
  } catch (const Error& e) {
    return {ErrorMessage{e.what()}};
  }
}

std::vector<Telemetry> replay(const Scenario& scenario, const LiveConfig& config,
                              const std::vector<TimedCommand>& trace, std::uint64_t ticks) {
  LiveSession session = LiveSession::start(scenario, config);
  std::vector<Telemetry> out;
  out.reserve(ticks);
  std::size_t next = 0;
  for (std::uint64_t k = 0; k < ticks; ++k) {
    while (next < trace.size() && trace[next].tick <= session.tick()) {
      session.handle(trace[next].command);
      ++next;
    }
    out.push_back(session.advance());
  }
  return out;
}

}  // namespace hrigame
