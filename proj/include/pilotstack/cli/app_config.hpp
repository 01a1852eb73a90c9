#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>

#include <json.hpp>

#include "pilotstack/drive/actuation.hpp"
#include "pilotstack/nn/model_spec.hpp"
#include "pilotstack/nn/trainer.hpp"
#include "pilotstack/sim/camera.hpp"
#include "pilotstack/sim/track.hpp"
#include "pilotstack/sim/vehicle.hpp"
#include "pilotstack/telemetry/hub.hpp"

namespace pilotstack::cli {

/// Everything a run depends on. JSON file first, then command-line flags.
struct AppConfig {
    sim::VehicleParams vehicle;
    sim::CameraModel camera;
    drive::LoopConfig loop;
    nn::TrainerConfig trainer;
    telemetry::HubConfig telemetry;
    std::optional<std::filesystem::path> model;  // model spec JSON; built-in default when absent
    std::optional<std::filesystem::path> track;  // track JSON; built-in default when absent
    std::optional<std::filesystem::path> tub;
    std::uint64_t seed = 1;
};

/// Unknown keys and wrong types are configuration errors.
AppConfig config_from_json(const nlohmann::json& doc, AppConfig base = {});
nlohmann::json config_to_json(const AppConfig& cfg);
AppConfig load_config(const std::filesystem::path& path);

/// Files the config refers to, loaded and validated.
struct ResolvedInputs {
    sim::TrackSpec track;
    nn::ModelSpec model;
};

/// Validates every section and loads the referenced files. Throws
/// ConfigError naming the offending field or path.
ResolvedInputs validate_config(const AppConfig& cfg);

}  // namespace pilotstack::cli
