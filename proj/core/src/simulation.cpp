#include "hrigame/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <string>

#include "hrigame/errors.hpp"

namespace hrigame {

void Scenario::validate() const {
  plant.validate();
  const Eigen::Index n = plant.dofs();
  human.validate(n, "human");
  robot.validate(n, "robot");
  if (refs.human.size() != 2 * n || refs.robot.size() != 2 * n) {
    throw ValidationError("references must have 2n = " + std::to_string(2 * n) + " components");
  }
  if (!refs.human.allFinite() || !refs.robot.allFinite()) {
    throw ValidationError("references must be finite");
  }
  if (!(alpha > 0.0 && alpha < 1.0)) {
    throw DomainError("alpha must lie in the open interval (0, 1), got " + std::to_string(alpha));
  }
  if (!(duration > 0.0) || !std::isfinite(duration)) throw ValidationError("duration must be positive");
  if (!(dt > 0.0) || !std::isfinite(dt)) throw ValidationError("dt must be positive");
  if (dt > duration) throw ValidationError("dt must not exceed duration");
  if (initial_state.pos.size() != n || initial_state.vel.size() != n) {
    throw ValidationError("initial_state must have n = " + std::to_string(n) + " positions and velocities");
  }
  if (!initial_state.pos.allFinite() || !initial_state.vel.allFinite()) {
    throw ValidationError("initial_state must be finite");
  }
  if (!(cost_window.start >= 0.0 && cost_window.end > cost_window.start &&
        cost_window.start < duration)) {
    throw WindowError("cost_window must satisfy 0 <= start < end and start < duration");
  }
}

bool operator==(const Scenario& lhs, const Scenario& rhs) {
  return lhs.plant == rhs.plant && lhs.human == rhs.human && lhs.robot == rhs.robot &&
         lhs.refs == rhs.refs && lhs.alpha == rhs.alpha && lhs.controller == rhs.controller &&
         lhs.duration == rhs.duration && lhs.dt == rhs.dt &&
         lhs.initial_state == rhs.initial_state && lhs.cost_window == rhs.cost_window;
}

std::size_t sample_count(double duration, double dt) {
  // The epsilon keeps exact multiples such as 0.001 / 0.001 from rounding down.
  return static_cast<std::size_t>(std::floor(duration / dt + 1e-9)) + 1;
}

namespace {

void reserve(Trajectory& traj, std::size_t count) {
  traj.times.reserve(count);
  traj.states.reserve(count);
  traj.u_h.reserve(count);
  traj.u_r.reserve(count);
  traj.u_h_nominal.reserve(count);
}

}  // namespace

Trajectory run_closed_loop(const Scenario& scenario, const HumanForceSource& human_force) {
  scenario.validate();
  const StateSpace ss = build_state_space(scenario.plant);
  const GameSolution solution = synthesize(scenario.controller, ss, scenario.alpha,
                                           scenario.human, scenario.robot, scenario.refs);
  return run_closed_loop(scenario, solution, human_force);
}

Trajectory run_closed_loop(const Scenario& scenario, const GameSolution& solution,
                           const HumanForceSource& human_force) {
  const StateSpace ss = build_state_space(scenario.plant);
  const std::size_t count = sample_count(scenario.duration, scenario.dt);

  Trajectory traj;
  reserve(traj, count);
  traj.z_ref = solution.z_ref;
  traj.ref_h = solution.ref_h;
  traj.ref_r = solution.ref_r;

  const InputLaw robot = InputLaw::feedback(solution.k_r, solution.ref_r);
  State z = scenario.initial_state;
  for (std::size_t i = 0; i < count; ++i) {
    const double t = static_cast<double>(i) * scenario.dt;
    const Eigen::VectorXd modeled = control_action(solution.k_h, z, solution.ref_h);
    const Eigen::VectorXd u_r = control_action(solution.k_r, z, solution.ref_r);
    Eigen::VectorXd u_h = human_force ? human_force(i, t, z, modeled) : modeled;
    if (u_h.size() != modeled.size()) {
      throw ValidationError("external human force has the wrong dimension");
    }

    traj.times.push_back(t);
    traj.states.push_back(z);
    traj.u_h_nominal.push_back(modeled);
    traj.u_r.push_back(u_r);
    traj.u_h.push_back(std::move(u_h));

    if (i + 1 < count) {
      const InputLaw human = human_force ? InputLaw::held(traj.u_h.back())
                                         : InputLaw::feedback(solution.k_h, solution.ref_h);
      z = step(ss, z, human, robot, scenario.dt);
    }
  }
  return traj;
}

Trajectory run_impedance_equivalent(const Scenario& scenario, const GameSolution& solution) {
  const Eigen::Index n = scenario.plant.dofs();
  const ImpedanceEquivalent eq =
      impedance_equivalent(scenario.plant, solution.k_r, solution.ref_r.head(n));
  // A non-zero velocity reference adds K_rv v_ref to the constant forcing.
  const Eigen::VectorXd forcing = eq.forcing + solution.k_r.rightCols(n) * solution.ref_r.tail(n);
  const StateSpace ss = build_state_space(eq.params);
  const std::size_t count = sample_count(scenario.duration, scenario.dt);

  Trajectory traj;
  reserve(traj, count);
  traj.z_ref = solution.z_ref;
  traj.ref_h = solution.ref_h;
  traj.ref_r = solution.ref_r;

  const InputLaw human = InputLaw::feedback(solution.k_h, solution.ref_h);
  State z = scenario.initial_state;
  for (std::size_t i = 0; i < count; ++i) {
    const Eigen::VectorXd u_h = control_action(solution.k_h, z, solution.ref_h);
    traj.times.push_back(static_cast<double>(i) * scenario.dt);
    traj.states.push_back(z);
    traj.u_h.push_back(u_h);
    traj.u_h_nominal.push_back(u_h);
    traj.u_r.push_back(forcing);
    if (i + 1 < count) z = step(ss, z, human, InputLaw::held(forcing), scenario.dt);
  }
  return traj;
}

namespace {

// Integral over [window.start, window.end] of the piecewise-linear interpolant of the
// samples produced by `integrand(i)`; the same interpolant yields the window maximum.
template <typename Integrand>
double integrate_window(const Trajectory& traj, TimeWindow window, Integrand&& integrand,
                        double* window_max = nullptr) {
  const auto& t = traj.times;
  if (t.size() < 2) throw WindowError("trajectory has fewer than two samples");
  const double slack = 1e-9 * std::max(1.0, std::abs(t.back()));
  if (!(window.start < window.end) || window.start < t.front() - slack ||
      window.end > t.back() + slack) {
    throw WindowError("window [" + std::to_string(window.start) + ", " +
                      std::to_string(window.end) + "] is outside the trajectory [" +
                      std::to_string(t.front()) + ", " + std::to_string(t.back()) + "]");
  }
  const double a = std::clamp(window.start, t.front(), t.back());
  const double b = std::clamp(window.end, t.front(), t.back());

  double total = 0.0;
  double peak = -1.0;
  for (std::size_t i = 0; i + 1 < t.size(); ++i) {
    const double lo = std::max(a, t[i]);
    const double hi = std::min(b, t[i + 1]);
    if (hi < lo) continue;
    const double f0 = integrand(i);
    const double f1 = integrand(i + 1);
    const double span = t[i + 1] - t[i];
    const auto at = [&](double s) {
      if (s == t[i]) return f0;
      if (s == t[i + 1]) return f1;
      return f0 + (f1 - f0) * (s - t[i]) / span;
    };
    const double g0 = at(lo);
    const double g1 = at(hi);
    total += 0.5 * (g0 + g1) * (hi - lo);
    peak = std::max({peak, g0, g1});
  }
  if (window_max != nullptr) *window_max = peak;
  return total;
}

}  // namespace

double agent_cost(const Trajectory& traj, const AgentObjective& objective, const References& refs,
                  TimeWindow window, Agent agent) {
  const auto& effort = agent == Agent::human ? traj.u_h : traj.u_r;
  return integrate_window(traj, window, [&](std::size_t i) {
    const Eigen::VectorXd z = traj.states[i].vector();
    const Eigen::VectorXd e_h = z - refs.human;
    const Eigen::VectorXd e_r = z - refs.robot;
    const Eigen::VectorXd& u = effort[i];
    return e_h.dot(objective.q_on_href * e_h) + e_r.dot(objective.q_on_rref * e_r) +
           u.dot(objective.r_self * u);
  });
}

double effort_error(const Trajectory& traj, TimeWindow window) {
  if (traj.u_h_nominal.size() != traj.size() || traj.u_h.size() != traj.size()) {
    throw ValidationError("trajectory lacks measured or nominal human effort");
  }
  double nominal_max = 0.0;
  integrate_window(traj, window, [&](std::size_t i) { return traj.u_h_nominal[i].norm(); },
                   &nominal_max);
  if (!(nominal_max >= 1e-12)) {
    throw DegenerateNormalizerError("nominal human effort vanishes over the window");
  }
  const double mismatch = integrate_window(
      traj, window, [&](std::size_t i) { return (traj.u_h[i] - traj.u_h_nominal[i]).norm(); });
  return mismatch / nominal_max;
}

CostReport cost_report(const Trajectory& traj, const Scenario& scenario) {
  CostReport report;
  report.window = scenario.cost_window;
  if (!traj.times.empty()) report.window.end = std::min(report.window.end, traj.times.back());
  report.j_h = agent_cost(traj, scenario.human, scenario.refs, report.window, Agent::human);
  report.j_r = agent_cost(traj, scenario.robot, scenario.refs, report.window, Agent::robot);
  return report;
}

std::string_view to_string(SweepParameter param) {
  switch (param) {
    case SweepParameter::alpha:
      return "alpha";
    case SweepParameter::q_rr_scale:
      return "q_rr_scale";
    case SweepParameter::r_r:
      return "r_r";
  }
  return "unknown";
}

SweepParameter parse_sweep_parameter(std::string_view name) {
  if (name == "alpha") return SweepParameter::alpha;
  if (name == "q_rr_scale") return SweepParameter::q_rr_scale;
  if (name == "r_r") return SweepParameter::r_r;
  throw ValidationError("unknown sweep parameter '" + std::string(name) +
                        "' (expected alpha, q_rr_scale or r_r)");
}

Scenario with_parameter(const Scenario& base, SweepParameter param, double value) {
  Scenario out = base;
  const Eigen::Index n = base.plant.dofs();
  switch (param) {
    case SweepParameter::alpha:
      out.alpha = value;
      break;
    case SweepParameter::q_rr_scale:
      out.robot.q_on_rref.topLeftCorner(n, n) *= value;
      break;
    case SweepParameter::r_r:
      out.robot.r_self = value * Eigen::MatrixXd::Identity(n, n);
      break;
  }
  return out;
}

namespace {

SweepResult run_one(const Scenario& base, SweepParameter param, double value) {
  SweepResult result;
  result.value = value;
  try {
    const Scenario scenario = with_parameter(base, param, value);
    Trajectory traj = run_closed_loop(scenario);
    result.costs = cost_report(traj, scenario);
    result.equilibrium = traj.states.back().pos;
    for (std::size_t i = 0; i < traj.size(); ++i) {
      result.peak_u_h = std::max(result.peak_u_h, traj.u_h[i].norm());
      result.peak_u_r = std::max(result.peak_u_r, traj.u_r[i].norm());
    }
    result.trajectory = std::move(traj);
  } catch (const Error& e) {
    result.error = e.what();
    if (result.error.empty()) result.error = "unknown error";
  }
  return result;
}

}  // namespace

std::vector<SweepResult> sweep(const Scenario& base, SweepParameter param,
                               const std::vector<double>& values) {
  if (values.empty()) throw ValidationError("sweep needs at least one value");
  std::vector<std::future<SweepResult>> pending;
  pending.reserve(values.size());
  for (const double value : values) {
    pending.push_back(std::async(std::launch::async, run_one, std::cref(base), param, value));
  }
  std::vector<SweepResult> results;
  results.reserve(values.size());
  for (auto& f : pending) results.push_back(f.get());
  return results;
}

}  // namespace hrigame
