#pragma once

#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "pilotstack/drive/control_loop.hpp"

namespace pilotstack::telemetry {

inline constexpr int kProtocolVersion = 1;

/// Wire form of a telemetry snapshot. `frame_jpeg_b64` is attached only when
/// the caller decided to stream this frame.
nlohmann::json telemetry_to_json(const drive::TelemetrySnapshot& snap,
                                 const std::optional<std::string>& frame_jpeg_b64 = std::nullopt);

std::string base64_encode(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> base64_decode(std::string_view text);

enum class ControlType { drive, mode, stop };

struct ControlMessage {
    ControlType type = ControlType::stop;
    double steering_norm = 0.0;
    double throttle_norm = 0.0;
    DriveMode mode = DriveMode::manual;
    bool clamped = false;  // drive values were outside [-1, 1]
};

/// Parses and validates one control message. Drive values are clamped to
/// [-1, 1]. Throws std::invalid_argument with a client-facing reason.
ControlMessage parse_control(std::string_view text);

/// Applies a parsed message to the loop mailbox.
void apply_control(const ControlMessage& msg, drive::ControlMailbox& mailbox);

nlohmann::json ack_reply(const ControlMessage& msg);
nlohmann::json error_reply(std::string_view reason);

/// Parse + apply + reply, never throws on bad input.
nlohmann::json handle_control(std::string_view text, drive::ControlMailbox& mailbox);

}  // namespace pilotstack::telemetry
