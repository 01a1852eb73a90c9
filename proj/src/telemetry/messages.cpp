#include "pilotstack/telemetry/messages.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <boost/beast/core/detail/base64.hpp>

namespace pilotstack::telemetry {

namespace b64 = boost::beast::detail::base64;

nlohmann::json telemetry_to_json(const drive::TelemetrySnapshot& snap, const std::optional<std::string>& frame_jpeg_b64) {
    nlohmann::json msg = {
        {"type", "telemetry"},
        {"v", kProtocolVersion},
        {"tick", snap.tick},
        {"timestamp_ms", snap.timestamp_ms},
        {"mode", std::string(to_string(snap.mode))},
        {"speed_mps", snap.speed_mps},
        {"steering_norm", snap.steering_norm},
        {"throttle_norm", snap.throttle_norm},
        {"motor_duty", snap.motor_duty},
        {"pose", {{"x_m", snap.pose.x_m}, {"y_m", snap.pose.y_m}, {"heading_rad", snap.pose.heading_rad}}},
        {"lap", {{"progress_m", snap.progress_m}, {"lateral_offset_m", snap.lateral_offset_m}}},
    };
    if (frame_jpeg_b64) {
        msg["frame_jpeg_b64"] = *frame_jpeg_b64;
        if (snap.frame) {
            msg["frame_width"] = snap.frame->width_px;
            msg["frame_height"] = snap.frame->height_px;
        }
    }
    return msg;
}

std::string base64_encode(const std::vector<std::uint8_t>& bytes) {
    std::string out(b64::encoded_size(bytes.size()), '\0');
    out.resize(b64::encode(out.data(), bytes.data(), bytes.size()));
    return out;
}

std::vector<std::uint8_t> base64_decode(std::string_view text) {
    if (text.size() % 4 != 0) throw std::invalid_argument("invalid base64");
    // The decoder stops at padding, so strip it before checking what was consumed.
    std::size_t pad = 0;
    while (pad < 2 && pad < text.size() && text[text.size() - 1 - pad] == '=') ++pad;
    const auto body = text.substr(0, text.size() - pad);
    std::vector<std::uint8_t> out(b64::decoded_size(text.size()));
    const auto [written, read] = b64::decode(out.data(), body.data(), body.size());
    if (read != body.size()) throw std::invalid_argument("invalid base64");
    out.resize(written);
    return out;
}

namespace {

double require_number(const nlohmann::json& obj, const char* key) {
    const auto it = obj.find(key);
    if (it == obj.end() || !it->is_number()) throw std::invalid_argument(std::string("drive.") + key + " must be a number");
    const double v = it->get<double>();
    if (!std::isfinite(v)) throw std::invalid_argument(std::string("drive.") + key + " must be finite");
    return v;
}

}  // namespace

ControlMessage parse_control(std::string_view text) {
    const auto doc = nlohmann::json::parse(text, nullptr, false);
    if (doc.is_discarded()) throw std::invalid_argument("malformed JSON");
    if (!doc.is_object()) throw std::invalid_argument("control message must be a JSON object");
    const auto type_it = doc.find("type");
    if (type_it == doc.end() || !type_it->is_string()) throw std::invalid_argument("missing string field 'type'");
    const auto type = type_it->get<std::string>();

    ControlMessage msg;
    if (type == "drive") {
        const auto it = doc.find("drive");
        if (it == doc.end() || !it->is_object()) throw std::invalid_argument("drive message needs a 'drive' object");
        const double s = require_number(*it, "steering_norm");
        const double t = require_number(*it, "throttle_norm");
        msg.type = ControlType::drive;
        msg.steering_norm = std::clamp(s, -1.0, 1.0);
        msg.throttle_norm = std::clamp(t, -1.0, 1.0);
        msg.clamped = msg.steering_norm != s || msg.throttle_norm != t;
    } else if (type == "mode") {
        const auto it = doc.find("mode");
        if (it == doc.end() || !it->is_string()) throw std::invalid_argument("mode message needs a string 'mode'");
        const auto mode = parse_drive_mode(it->get<std::string>());
        if (!mode) throw std::invalid_argument("unknown mode '" + it->get<std::string>() + "'");
        msg.type = ControlType::mode;
        msg.mode = *mode;
    } else if (type == "stop") {
        msg.type = ControlType::stop;
    } else {
        throw std::invalid_argument("unknown message type '" + type + "'");
    }
    return msg;
}

void apply_control(const ControlMessage& msg, drive::ControlMailbox& mailbox) {
    switch (msg.type) {
        case ControlType::drive: mailbox.post_drive(msg.steering_norm, msg.throttle_norm); break;
        case ControlType::mode: mailbox.post_mode(msg.mode); break;
        case ControlType::stop: mailbox.post_stop(); break;
    }
}

nlohmann::json ack_reply(const ControlMessage& msg) {
    nlohmann::json reply = {{"type", "ack"}, {"v", kProtocolVersion}};
    switch (msg.type) {
        case ControlType::drive:
            reply["ack"] = "drive";
            reply["clamped"] = msg.clamped;
            reply["applied"] = {{"steering_norm", msg.steering_norm}, {"throttle_norm", msg.throttle_norm}};
            break;
        case ControlType::mode:
            reply["ack"] = "mode";
            reply["mode"] = std::string(to_string(msg.mode));
            break;
        case ControlType::stop: reply["ack"] = "stop"; break;
    }
    return reply;
}

nlohmann::json error_reply(std::string_view reason) {
    return {{"type", "error"}, {"v", kProtocolVersion}, {"error", std::string(reason)}};
}

nlohmann::json handle_control(std::string_view text, drive::ControlMailbox& mailbox) {
    try {
        const ControlMessage msg = parse_control(text);
        apply_control(msg, mailbox);
        return ack_reply(msg);
    } catch (const std::invalid_argument& e) {
        return error_reply(e.what());
    }
}

}  // namespace pilotstack::telemetry
