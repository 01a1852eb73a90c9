#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>

#include "pilotstack/drive/control_loop.hpp"

namespace pilotstack::drive {

/// Recovery-style data generation with the pure-pursuit pilot. Each episode
/// starts at a random point of the track, displaced sideways and rotated, and
/// drives with AR(1) noise added to the executed steering. The recorded label
/// is always the clean pilot command for the observed frame, so the data
/// shows how to return to the centerline from off-nominal poses.
struct DatagenOptions {
    std::size_t frames = 2000;
    std::uint64_t seed = 1;
    double rate_hz = 20.0;
    double target_speed_mps = 0.8;
    double lookahead_m = 0.4;
    double lateral_jitter_m = 0.15;
    double heading_jitter_rad = 0.3;
    int episode_ticks = 40;
    double steer_noise_std = 0.3;  // stationary std of the AR(1) process, normalized units
    double steer_noise_rho = 0.8;

    void validate() const;
};

struct Sample {
    const sim::ImageFrame& frame;
    double steering = 0.0;
    double throttle = 0.0;
    std::int64_t timestamp_ms = 0;
    const sim::VehicleState& state;
};

using SampleSink = std::function<void(const Sample&)>;

/// Emits exactly `opts.frames` samples. Deterministic for a fixed seed.
void generate_dataset(const World& world, const DatagenOptions& opts, const SampleSink& sink);

}  // namespace pilotstack::drive
