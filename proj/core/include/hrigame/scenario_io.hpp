#pragma once

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "hrigame/simulation.hpp"

namespace hrigame {

inline constexpr std::string_view kScenarioSchema = "hrigame.scenario/1";

struct SweepSpec {
  SweepParameter param = SweepParameter::alpha;
  std::vector<double> values;

  friend bool operator==(const SweepSpec&, const SweepSpec&) = default;
};

/// A scenario document plus an optional sweep block. See docs/scenario-format.md.
struct ScenarioFile {
  Scenario scenario;
  std::optional<SweepSpec> sweep;

  friend bool operator==(const ScenarioFile&, const ScenarioFile&) = default;
};

/// Parses and validates a scenario document. Throws ValidationError naming the offending
/// field (for example "plant.inertia: missing field").
ScenarioFile parse_scenario(const nlohmann::json& doc);
ScenarioFile parse_scenario_text(std::string_view text);

/// Reads a scenario file. Throws IoError when the file cannot be read.
ScenarioFile load_scenario(const std::filesystem::path& path);

nlohmann::json to_json(const ScenarioFile& file);

nlohmann::json matrix_to_json(const Eigen::Ref<const Eigen::MatrixXd>& m);
Eigen::MatrixXd matrix_from_json(const nlohmann::json& j, std::string_view field);
nlohmann::json vector_to_json(const Eigen::Ref<const Eigen::VectorXd>& v);
Eigen::VectorXd vector_from_json(const nlohmann::json& j, std::string_view field);

/// 17 significant digits (round-trip exact for doubles), locale independent.
std::string format_double(double value);

/// time,pos_0..,vel_0..,u_h_0..,u_r_0..,u_h_nominal_0..
void write_trajectory_csv(std::ostream& out, const Trajectory& traj);
/// j_h,j_r,window_start,window_end
void write_costs_csv(std::ostream& out, const CostReport& costs);
/// value,equilibrium_0..,peak_u_h,peak_u_r,j_h,j_r,error
void write_summary_csv(std::ostream& out, const std::vector<SweepResult>& results);

}  // namespace hrigame
