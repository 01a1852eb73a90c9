#include "pilotstack/drive/datagen.hpp"

#include <cmath>
#include <random>

#include "pilotstack/errors.hpp"
#include "pilotstack/random.hpp"

namespace pilotstack::drive {

void DatagenOptions::validate() const {
    if (frames == 0) throw ConfigError("datagen.frames must be positive");
    if (!(rate_hz > 0.0)) throw ConfigError("datagen.rate_hz must be positive");
    if (!(target_speed_mps > 0.0)) throw ConfigError("datagen.target_speed_mps must be positive");
    if (!(lookahead_m > 0.0)) throw ConfigError("datagen.lookahead_m must be positive");
    if (episode_ticks <= 0) throw ConfigError("datagen.episode_ticks must be positive");
    if (!(steer_noise_rho >= 0.0 && steer_noise_rho < 1.0)) throw ConfigError("datagen.steer_noise_rho must lie in [0, 1)");
    if (!(steer_noise_std >= 0.0)) throw ConfigError("datagen.steer_noise_std must be non-negative");
}

void generate_dataset(const World& world, const DatagenOptions& opts, const SampleSink& sink) {
    opts.validate();
    const sim::Track& track = world.track;
    const PurePursuitPilot pilot(opts.target_speed_mps, opts.lookahead_m);
    const double throttle = std::min(1.0, opts.target_speed_mps / world.vehicle.max_speed_mps);
    const double dt = 1.0 / opts.rate_hz;
    // Keep the whole body inside the lane; samples beyond this are not useful.
    const double max_offset = track.lane_width() / 2.0 - 0.02;
    const double innovation = opts.steer_noise_std * std::sqrt(1.0 - opts.steer_noise_rho * opts.steer_noise_rho);

    Rng rng(opts.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::size_t emitted = 0;
    std::int64_t tick = 0;

    while (emitted < opts.frames) {
        const double s0 = uniform(rng, 0.0, track.perimeter());
        const double lateral = uniform(rng, -opts.lateral_jitter_m, opts.lateral_jitter_m);
        const double dpsi = uniform(rng, -opts.heading_jitter_rad, opts.heading_jitter_rad);
        sim::VehicleState state = sim::start_state(track, s0);
        state.x_m -= lateral * std::sin(state.heading_rad);
        state.y_m += lateral * std::cos(state.heading_rad);
        state.heading_rad = sim::wrap_angle(state.heading_rad + dpsi);
        state.speed_mps = opts.target_speed_mps;
        double noise = opts.steer_noise_std * gauss(rng);

        for (int k = 0; k < opts.episode_ticks && emitted < opts.frames; ++k) {
            if (std::abs(sim::lateral_offset(track, state)) > max_offset) break;
            const sim::ImageFrame frame = sim::render_camera(track, state, world.camera, world.style);
            const double label = pilot.steering_for(state, track, world.vehicle);
            sink(Sample{frame, label, throttle, static_cast<std::int64_t>(std::llround(tick * dt * 1000.0)), state});
            ++emitted;
            ++tick;
            const double executed = clamp_unit(label + noise);
            state = sim::step_vehicle(state, throttle, executed, dt, world.vehicle);
            noise = opts.steer_noise_rho * noise + innovation * gauss(rng);
        }
    }
}

}  // namespace pilotstack::drive
