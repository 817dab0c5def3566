#pragma once

#include <string>
#include <string_view>

#include "hrigame/live_session.hpp"

namespace hrigame::wire {

/// Every message is a JSON object carrying {"v": kVersion, "session": id, "type": ...}.
inline constexpr int kVersion = 1;

/// Decodes apply_force / set_alpha / set_controller / reset. Throws ValidationError on an
/// unknown type, schema version or session id mismatch, or malformed payload.
ClientCommand decode_client(std::string_view text, std::string_view session_id);
std::string encode_client(const ClientCommand& command, std::string_view session_id);

/// Encodes telemetry / gains_changed / error.
std::string encode_server(const ServerEvent& event, std::string_view session_id);
ServerEvent decode_server(std::string_view text, std::string* session_id = nullptr);

}  // namespace hrigame::wire
