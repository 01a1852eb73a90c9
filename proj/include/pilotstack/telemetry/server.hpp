#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include <json.hpp>

#include "pilotstack/telemetry/hub.hpp"

namespace pilotstack::telemetry {

struct ServerConfig {
    std::string host = "127.0.0.1";
    std::uint16_t port = 8887;  // 0 picks a free port
    std::optional<std::string> token;
    std::filesystem::path web_dir;  // static UI assets; a built-in page is served when absent
    int socket_send_buffer = 64 * 1024;
};

/// "host:port" as used by PILOTSTACK_BIND. Throws ConfigError.
std::pair<std::string, std::uint16_t> parse_bind(std::string_view text);

/// Defaults overridden by PILOTSTACK_BIND and PILOTSTACK_TOKEN.
ServerConfig server_config_from_env();

/// Directory with the bundled UI assets.
std::filesystem::path default_web_dir();

using StatusProvider = std::function<nlohmann::json()>;
using ControlHandler = std::function<nlohmann::json(std::string_view)>;

/// HTTP + WebSocket endpoint on its own I/O thread.
///   GET /         UI assets
///   GET /healthz  JSON from the status provider
///   GET /ws       WebSocket: telemetry out, control messages in
/// With a token configured, /ws requires `?token=...` (or a Bearer header).
class TelemetryServer {
public:
    TelemetryServer(ServerConfig cfg, TelemetryHub& hub, ControlHandler control, StatusProvider status);
    ~TelemetryServer();
    TelemetryServer(const TelemetryServer&) = delete;
    TelemetryServer& operator=(const TelemetryServer&) = delete;

    /// Binds and starts serving. Throws std::runtime_error when the address
    /// cannot be bound.
    void start();
    void stop();

    std::uint16_t port() const;
    std::string url() const;

    struct Impl;  // opaque; public only so session types can name it

private:
    std::unique_ptr<Impl> impl_;
};

}  // namespace pilotstack::telemetry
