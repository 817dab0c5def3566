#include "hrigame/wire.hpp"

#include <nlohmann/json.hpp>

#include "hrigame/errors.hpp"
#include "hrigame/scenario_io.hpp"

namespace hrigame::wire {

using nlohmann::json;

namespace {

json envelope(std::string_view type, std::string_view session_id) {
  return {{"v", kVersion}, {"session", session_id}, {"type", type}};
}

json parse_envelope(std::string_view text, std::string* session_id) {
  json msg;
  try {
    msg = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ValidationError(std::string("message is not valid JSON: ") + e.what());
  }
  if (!msg.is_object()) throw ValidationError("message must be a JSON object");
  const auto v = msg.find("v");
  if (v == msg.end() || !v->is_number_integer() || v->get<int>() != kVersion) {
    throw ValidationError("message has a missing or unsupported schema version");
  }
  const auto session = msg.find("session");
  if (session == msg.end() || !session->is_string()) {
    throw ValidationError("message has no session id");
  }
  if (session_id != nullptr) *session_id = session->get<std::string>();
  const auto type = msg.find("type");
  if (type == msg.end() || !type->is_string()) throw ValidationError("message has no type");
  return msg;
}

const json& field(const json& msg, const char* key) {
  const auto it = msg.find(key);
  if (it == msg.end()) {
    throw ValidationError(msg.at("type").get<std::string>() + ": missing field '" + key + "'");
  }
  return *it;
}

json optional_vector(const std::optional<Eigen::VectorXd>& v) {
  return v ? vector_to_json(*v) : json(nullptr);
}

std::optional<Eigen::VectorXd> optional_vector_from(const json& j, std::string_view name) {
  if (j.is_null()) return std::nullopt;
  return vector_from_json(j, name);
}

// Gains travel as nested row arrays.
json rows_to_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) rows.push_back(vector_to_json(m.row(i).transpose()));
  return rows;
}

Eigen::MatrixXd rows_from_json(const json& j, std::string_view name) {
  if (!j.is_array() || j.empty()) throw ValidationError(std::string(name) + ": expected rows");
  const Eigen::Index cols = static_cast<Eigen::Index>(j.front().size());
  Eigen::MatrixXd m(static_cast<Eigen::Index>(j.size()), cols);
  for (std::size_t i = 0; i < j.size(); ++i) {
    const Eigen::VectorXd row = vector_from_json(j[i], name);
    if (row.size() != cols) throw ValidationError(std::string(name) + ": ragged rows");
    m.row(static_cast<Eigen::Index>(i)) = row.transpose();
  }
  return m;
}

}  // namespace

ClientCommand decode_client(std::string_view text, std::string_view session_id) {
  std::string sender;
  const json msg = parse_envelope(text, &sender);
  if (sender != session_id) {
    throw ValidationError("message addressed to session '" + sender + "', this is '" +
                          std::string(session_id) + "'");
  }
  const std::string type = msg.at("type").get<std::string>();
  if (type == "apply_force") return ApplyForce{vector_from_json(field(msg, "force"), "force")};
  if (type == "set_alpha") {
    const json& alpha = field(msg, "alpha");
    if (!alpha.is_number()) throw ValidationError("set_alpha: alpha must be a number");
    return SetAlpha{alpha.get<double>()};
  }
  if (type == "set_controller") {
    const json& kind = field(msg, "controller");
    if (!kind.is_string()) throw ValidationError("set_controller: controller must be a string");
    return SetController{parse_controller(kind.get<std::string>())};
  }
  if (type == "reset") return Reset{};
  throw ValidationError("unknown message type '" + type + "'");
}

std::string encode_client(const ClientCommand& command, std::string_view session_id) {
  return std::visit(
      [&](const auto& cmd) {
        using T = std::decay_t<decltype(cmd)>;
        json msg;
        if constexpr (std::is_same_v<T, ApplyForce>) {
          msg = envelope("apply_force", session_id);
          msg["force"] = vector_to_json(cmd.force);
        } else if constexpr (std::is_same_v<T, SetAlpha>) {
          msg = envelope("set_alpha", session_id);
          msg["alpha"] = cmd.alpha;
        } else if constexpr (std::is_same_v<T, SetController>) {
          msg = envelope("set_controller", session_id);
          msg["controller"] = to_string(cmd.controller);
        } else {
          msg = envelope("reset", session_id);
        }
        return msg.dump();
      },
      command);
}

std::string encode_server(const ServerEvent& event, std::string_view session_id) {
  return std::visit(
      [&](const auto& ev) {
        using T = std::decay_t<decltype(ev)>;
        json msg;
        if constexpr (std::is_same_v<T, Telemetry>) {
          msg = envelope("telemetry", session_id);
          msg["tick"] = ev.tick;
          msg["time"] = ev.time;
          msg["pos"] = vector_to_json(ev.pos);
          msg["vel"] = vector_to_json(ev.vel);
          msg["u_h"] = vector_to_json(ev.u_h);
          msg["u_r"] = vector_to_json(ev.u_r);
          msg["u_h_nominal"] = vector_to_json(ev.u_h_nominal);
          msg["z_ref"] = optional_vector(ev.z_ref);
        } else if constexpr (std::is_same_v<T, GainsChanged>) {
          msg = envelope("gains_changed", session_id);
          msg["k_h"] = rows_to_json(ev.k_h);
          msg["k_r"] = rows_to_json(ev.k_r);
          msg["z_ref"] = optional_vector(ev.z_ref);
          msg["alpha"] = ev.alpha;
          msg["controller"] = to_string(ev.controller);
        } else {
          msg = envelope("error", session_id);
          msg["text"] = ev.text;
        }
        return msg.dump();
      },
      event);
}

ServerEvent decode_server(std::string_view text, std::string* session_id) {
  const json msg = parse_envelope(text, session_id);
  const std::string type = msg.at("type").get<std::string>();
  if (type == "telemetry") {
    Telemetry t;
    t.tick = field(msg, "tick").get<std::uint64_t>();
    t.time = field(msg, "time").get<double>();
    t.pos = vector_from_json(field(msg, "pos"), "pos");
    t.vel = vector_from_json(field(msg, "vel"), "vel");
    t.u_h = vector_from_json(field(msg, "u_h"), "u_h");
    t.u_r = vector_from_json(field(msg, "u_r"), "u_r");
    t.u_h_nominal = vector_from_json(field(msg, "u_h_nominal"), "u_h_nominal");
    t.z_ref = optional_vector_from(field(msg, "z_ref"), "z_ref");
    return t;
  }
  if (type == "gains_changed") {
    GainsChanged g;
    g.k_h = rows_from_json(field(msg, "k_h"), "k_h");
    g.k_r = rows_from_json(field(msg, "k_r"), "k_r");
    g.z_ref = optional_vector_from(field(msg, "z_ref"), "z_ref");
    g.alpha = field(msg, "alpha").get<double>();
    g.controller = parse_controller(field(msg, "controller").get<std::string>());
    return g;
  }
  if (type == "error") return ErrorMessage{field(msg, "text").get<std::string>()};
  throw ValidationError("unknown message type '" + type + "'");
}

}  // namespace hrigame::wire
