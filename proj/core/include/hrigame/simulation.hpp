#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "hrigame/controllers.hpp"
#include "hrigame/dynamics.hpp"

namespace hrigame {

struct TimeWindow {
  double start = 0.0;
  double end = 3.5;

  friend bool operator==(const TimeWindow&, const TimeWindow&) = default;
};

/// Full configuration of one closed-loop experiment.
struct Scenario {
  ImpedanceParams plant;
  AgentObjective human;
  AgentObjective robot;
  References refs;
  double alpha = 0.5;
  ControllerKind controller = ControllerKind::cgt;
  double duration = 10.0;  // s
  double dt = kDefaultDt;  // s
  State initial_state;
  TimeWindow cost_window;

  /// Throws ValidationError (or a subclass) describing the first violated constraint.
  void validate() const;

  friend bool operator==(const Scenario& lhs, const Scenario& rhs);
};

/// Number of grid points of a run: floor(duration / dt) + 1.
std::size_t sample_count(double duration, double dt);

struct Trajectory {
  std::vector<double> times;
  std::vector<State> states;
  std::vector<Eigen::VectorXd> u_h;
  std::vector<Eigen::VectorXd> u_r;
  /// Human effort predicted by the model gain; equals u_h unless an external stream is used.
  std::vector<Eigen::VectorXd> u_h_nominal;
  std::optional<Eigen::VectorXd> z_ref;
  Eigen::VectorXd ref_h;
  Eigen::VectorXd ref_r;

  std::size_t size() const { return times.size(); }
};

/// Supplies the measured human force at grid point `index`; `modeled` is what the human
/// model would apply there.
using HumanForceSource = std::function<Eigen::VectorXd(std::size_t index, double time,
                                                       const State& z,
                                                       const Eigen::VectorXd& modeled)>;

/// Synthesizes the scenario's controller and integrates the closed loop.
Trajectory run_closed_loop(const Scenario& scenario, const HumanForceSource& human_force = {});

/// Same, with an already synthesized solution.
Trajectory run_closed_loop(const Scenario& scenario, const GameSolution& solution,
                           const HumanForceSource& human_force = {});

/// Runs the plant with the robot feedback folded into its impedance, driven by the modeled
/// human and the constant equivalent forcing (recorded as u_r).
Trajectory run_impedance_equivalent(const Scenario& scenario, const GameSolution& solution);

enum class Agent { human, robot };

/// Trapezoidal integral over `window` of the agent's tracking and own-effort cost.
/// Endpoints off the grid are handled by linear interpolation of the integrand.
double agent_cost(const Trajectory& traj, const AgentObjective& objective, const References& refs,
                  TimeWindow window, Agent agent);

/// Integral of ||u_h - u_h_nominal|| over `window`, divided by the largest nominal effort
/// norm seen in the window.
double effort_error(const Trajectory& traj, TimeWindow window);

struct CostReport {
  double j_h = 0.0;
  double j_r = 0.0;
  TimeWindow window;
};

/// Costs over the scenario's window, cut at the end of the trajectory. `window` holds the
/// interval actually integrated.
CostReport cost_report(const Trajectory& traj, const Scenario& scenario);

enum class SweepParameter { alpha, q_rr_scale, r_r };

std::string_view to_string(SweepParameter param);
SweepParameter parse_sweep_parameter(std::string_view name);

/// Applies one sweep value: alpha sets the Pareto weight, q_rr_scale scales the position
/// block of the robot's weight on its own reference, r_r sets the robot effort weight to
/// value * I.
Scenario with_parameter(const Scenario& base, SweepParameter param, double value);

struct SweepResult {
  double value = 0.0;
  std::optional<Trajectory> trajectory;
  std::optional<CostReport> costs;
  Eigen::VectorXd equilibrium;  // final position
  double peak_u_h = 0.0;
  double peak_u_r = 0.0;
  std::string error;

  bool ok() const { return error.empty(); }
};

/// One full run per value, results in input order. A failing value records its error and
/// the sweep carries on. Runs execute concurrently.
std::vector<SweepResult> sweep(const Scenario& base, SweepParameter param,
                               const std::vector<double>& values);

}  // namespace hrigame
