#include "hrigame/scenario_io.hpp"

#include <array>
#include <charconv>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>

#include "hrigame/errors.hpp"

namespace hrigame {

using nlohmann::json;

namespace {

std::string join(std::string_view parent, std::string_view child) {
  if (parent.empty()) return std::string(child);
  return std::string(parent) + "." + std::string(child);
}

const json& require(const json& obj, std::string_view parent, const char* key) {
  if (!obj.is_object()) throw ValidationError(std::string(parent) + ": expected an object");
  const auto it = obj.find(key);
  if (it == obj.end()) throw ValidationError(join(parent, key) + ": missing field");
  return *it;
}

double number(const json& j, std::string_view field) {
  if (!j.is_number()) throw ValidationError(std::string(field) + ": expected a number");
  return j.get<double>();
}

std::string text(const json& j, std::string_view field) {
  if (!j.is_string()) throw ValidationError(std::string(field) + ": expected a string");
  return j.get<std::string>();
}

AgentObjective objective_from_json(const json& j, std::string_view field) {
  AgentObjective obj;
  obj.q_on_href = matrix_from_json(require(j, field, "q_on_href"), join(field, "q_on_href"));
  obj.q_on_rref = matrix_from_json(require(j, field, "q_on_rref"), join(field, "q_on_rref"));
  obj.r_self = matrix_from_json(require(j, field, "r_self"), join(field, "r_self"));
  return obj;
}

json objective_to_json(const AgentObjective& obj) {
  return {{"q_on_href", matrix_to_json(obj.q_on_href)},
          {"q_on_rref", matrix_to_json(obj.q_on_rref)},
          {"r_self", matrix_to_json(obj.r_self)}};
}

template <typename E>
void rethrow_as(const ValidationError& e, const std::string& message) {
  if (dynamic_cast<const E*>(&e) != nullptr) throw E(message);
}

// Prefixes validation messages with the document section they came from, keeping the type.
template <typename F>
void validated(std::string_view section, F&& check) {
  try {
    check();
  } catch (const ValidationError& e) {
    const std::string message = std::string(section) + ": " + e.what();
    rethrow_as<DomainError>(e, message);
    rethrow_as<SingularInertiaError>(e, message);
    rethrow_as<IndefiniteWeightError>(e, message);
    rethrow_as<SingularWeightError>(e, message);
    rethrow_as<WindowError>(e, message);
    rethrow_as<DegenerateNormalizerError>(e, message);
    throw ValidationError(message);
  }
}

}  // namespace

json matrix_to_json(const Eigen::Ref<const Eigen::MatrixXd>& m) {
  json data = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) data.push_back(m(i, j));
  }
  return {{"rows", m.rows()}, {"cols", m.cols()}, {"data", std::move(data)}};
}

Eigen::MatrixXd matrix_from_json(const json& j, std::string_view field) {
  const auto& rows_j = require(j, field, "rows");
  const auto& cols_j = require(j, field, "cols");
  const auto& data = require(j, field, "data");
  if (!rows_j.is_number_integer() || !cols_j.is_number_integer() || rows_j.get<long>() <= 0 ||
      cols_j.get<long>() <= 0) {
    throw ValidationError(std::string(field) + ": rows and cols must be positive integers");
  }
  const auto rows = rows_j.get<Eigen::Index>();
  const auto cols = cols_j.get<Eigen::Index>();
  if (!data.is_array() || static_cast<Eigen::Index>(data.size()) != rows * cols) {
    throw ValidationError(std::string(field) + ": data must hold rows*cols = " +
                          std::to_string(rows * cols) + " numbers");
  }
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      m(i, c) = number(data[static_cast<std::size_t>(i * cols + c)], join(field, "data"));
    }
  }
  return m;
}

json vector_to_json(const Eigen::Ref<const Eigen::VectorXd>& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

Eigen::VectorXd vector_from_json(const json& j, std::string_view field) {
  if (!j.is_array()) throw ValidationError(std::string(field) + ": expected an array of numbers");
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v(static_cast<Eigen::Index>(i)) = number(j[i], field);
  return v;
}

ScenarioFile parse_scenario(const json& doc) {
  if (!doc.is_object()) throw ValidationError("scenario: expected a JSON object");
  const std::string schema = text(require(doc, "", "schema"), "schema");
  if (schema != kScenarioSchema) {
    throw ValidationError("schema: unsupported version '" + schema + "' (expected '" +
                          std::string(kScenarioSchema) + "')");
  }

  ScenarioFile file;
  Scenario& s = file.scenario;

  const json& plant = require(doc, "", "plant");
  s.plant.inertia = matrix_from_json(require(plant, "plant", "inertia"), "plant.inertia");
  s.plant.damping = matrix_from_json(require(plant, "plant", "damping"), "plant.damping");
  s.plant.stiffness = matrix_from_json(require(plant, "plant", "stiffness"), "plant.stiffness");
  validated("plant", [&] { s.plant.validate(); });
  const Eigen::Index n = s.plant.dofs();

  s.human = objective_from_json(require(doc, "", "human"), "human");
  s.robot = objective_from_json(require(doc, "", "robot"), "robot");
  validated("human", [&] { s.human.validate(n, "human"); });
  validated("robot", [&] { s.robot.validate(n, "robot"); });

  const json& refs = require(doc, "", "references");
  s.refs.human = vector_from_json(require(refs, "references", "human"), "references.human");
  s.refs.robot = vector_from_json(require(refs, "references", "robot"), "references.robot");

  s.alpha = number(require(doc, "", "alpha"), "alpha");
  s.controller = parse_controller(text(require(doc, "", "controller"), "controller"));
  s.duration = number(require(doc, "", "duration"), "duration");
  s.dt = doc.contains("dt") ? number(doc.at("dt"), "dt") : kDefaultDt;

  if (doc.contains("initial_state")) {
    const json& init = doc.at("initial_state");
    s.initial_state.pos =
        vector_from_json(require(init, "initial_state", "pos"), "initial_state.pos");
    s.initial_state.vel =
        vector_from_json(require(init, "initial_state", "vel"), "initial_state.vel");
  } else {
    s.initial_state = State::zero(n);
  }

  if (doc.contains("cost_window")) {
    const json& w = doc.at("cost_window");
    if (!w.is_array() || w.size() != 2) {
      throw ValidationError("cost_window: expected [start, end]");
    }
    s.cost_window = {number(w[0], "cost_window"), number(w[1], "cost_window")};
  }
  validated("scenario", [&] { s.validate(); });

  if (doc.contains("sweep")) {
    const json& sw = doc.at("sweep");
    SweepSpec spec;
    spec.param = parse_sweep_parameter(text(require(sw, "sweep", "param"), "sweep.param"));
    const Eigen::VectorXd values = vector_from_json(require(sw, "sweep", "values"), "sweep.values");
    spec.values.assign(values.data(), values.data() + values.size());
    file.sweep = std::move(spec);
  }
  return file;
}

ScenarioFile parse_scenario_text(std::string_view text_doc) {
  json doc;
  try {
    doc = json::parse(text_doc);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("scenario: malformed JSON: ") + e.what());
  }
  return parse_scenario(doc);
}

ScenarioFile load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open scenario file " + path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) throw IoError("failed reading scenario file " + path.string());
  return parse_scenario_text(buffer.str());
}

json to_json(const ScenarioFile& file) {
  const Scenario& s = file.scenario;
  json doc;
  doc["schema"] = kScenarioSchema;
  doc["plant"] = {{"inertia", matrix_to_json(s.plant.inertia)},
                  {"damping", matrix_to_json(s.plant.damping)},
                  {"stiffness", matrix_to_json(s.plant.stiffness)}};
  doc["human"] = objective_to_json(s.human);
  doc["robot"] = objective_to_json(s.robot);
  doc["references"] = {{"human", vector_to_json(s.refs.human)},
                       {"robot", vector_to_json(s.refs.robot)}};
  doc["alpha"] = s.alpha;
  doc["controller"] = to_string(s.controller);
  doc["duration"] = s.duration;
  doc["dt"] = s.dt;
  doc["initial_state"] = {{"pos", vector_to_json(s.initial_state.pos)},
                          {"vel", vector_to_json(s.initial_state.vel)}};
  doc["cost_window"] = {s.cost_window.start, s.cost_window.end};
  if (file.sweep) {
    doc["sweep"] = {{"param", to_string(file.sweep->param)}, {"values", file.sweep->values}};
  }
  return doc;
}

std::string format_double(double value) {
  std::array<char, 32> buf{};
  const auto res =
      std::to_chars(buf.data(), buf.data() + buf.size(), value, std::chars_format::general, 17);
  return std::string(buf.data(), res.ptr);
}

namespace {

void write_vector(std::ostream& out, const Eigen::VectorXd& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i) out << ',' << format_double(v(i));
}

void write_indexed_header(std::ostream& out, std::string_view name, Eigen::Index n) {
  for (Eigen::Index i = 0; i < n; ++i) out << ',' << name << '_' << i;
}

}  // namespace

void write_trajectory_csv(std::ostream& out, const Trajectory& traj) {
  const Eigen::Index n = traj.states.empty() ? 0 : traj.states.front().dofs();
  out << "time";
  for (const char* name : {"pos", "vel", "u_h", "u_r", "u_h_nominal"}) {
    write_indexed_header(out, name, n);
  }
  out << '\n';
  for (std::size_t i = 0; i < traj.size(); ++i) {
    out << format_double(traj.times[i]);
    write_vector(out, traj.states[i].pos);
    write_vector(out, traj.states[i].vel);
    write_vector(out, traj.u_h[i]);
    write_vector(out, traj.u_r[i]);
    write_vector(out, traj.u_h_nominal[i]);
    out << '\n';
  }
}

void write_costs_csv(std::ostream& out, const CostReport& costs) {
  out << "j_h,j_r,window_start,window_end\n"
      << format_double(costs.j_h) << ',' << format_double(costs.j_r) << ','
      << format_double(costs.window.start) << ',' << format_double(costs.window.end) << '\n';
}

void write_summary_csv(std::ostream& out, const std::vector<SweepResult>& results) {
  Eigen::Index n = 0;
  for (const auto& r : results) {
    if (r.ok()) {
      n = r.equilibrium.size();
      break;
    }
  }
  out << "value";
  write_indexed_header(out, "equilibrium", n);
  out << ",peak_u_h,peak_u_r,j_h,j_r,error\n";
  for (const auto& r : results) {
    out << format_double(r.value);
    if (r.ok()) {
      write_vector(out, r.equilibrium);
      out << ',' << format_double(r.peak_u_h) << ',' << format_double(r.peak_u_r) << ','
          << format_double(r.costs->j_h) << ',' << format_double(r.costs->j_r) << ",\n";
    } else {
      for (Eigen::Index i = 0; i < n + 4; ++i) out << ',';
      std::string message = r.error;
      for (char& c : message) {
        if (c == ',' || c == '\n' || c == '"') c = ' ';
      }
      out << ',' << message << '\n';
    }
  }
}

}  // namespace hrigame
