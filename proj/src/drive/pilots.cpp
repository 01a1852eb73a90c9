#include "pilotstack/drive/pilots.hpp"

#include <algorithm>
#include <cmath>

#include "pilotstack/dataset/image_ops.hpp"

namespace pilotstack::drive {

double PurePursuitPilot::steering_for(const sim::VehicleState& state, const sim::Track& track,
                                      const sim::VehicleParams& vehicle) const {
    const sim::Vec2 pos{state.x_m, state.y_m};
    const auto proj = track.project(pos);
    const sim::Vec2 goal = track.point_at(proj.progress_m + lookahead_m_);
    const sim::Vec2 d = goal - pos;
    const double ch = std::cos(state.heading_rad);
    const double sh = std::sin(state.heading_rad);
    const double ahead = d.x * ch + d.y * sh;
    const double left = -d.x * sh + d.y * ch;
    const double dist = std::hypot(ahead, left);
    if (dist < 1e-9) return 0.0;
    const double alpha = std::atan2(left, ahead);
    const double steer = std::atan2(2.0 * vehicle.wheelbase_m * std::sin(alpha), dist);
    return std::clamp(steer / vehicle.max_steer_rad, -1.0, 1.0);
}

PilotCommand PurePursuitPilot::decide(const PilotInput& input) {
    return {steering_for(input.state, input.track, input.vehicle),
            std::clamp(target_speed_mps_ / input.vehicle.max_speed_mps, 0.0, 1.0)};
}

CnnPilot::CnnPilot(std::shared_ptr<const nn::Network<float>> net,
                   std::shared_ptr<const nn::ModelWeights<float>> weights)
    : net_(std::move(net)), weights_(std::move(weights)) {
    net_->check_weights(*weights_);
}

PilotCommand CnnPilot::decide(const PilotInput& input) {
    const auto& spec = net_->spec();
    const bool resize = static_cast<std::size_t>(input.frame.width_px) != spec.input_width ||
                        static_cast<std::size_t>(input.frame.height_px) != spec.input_height;
    const auto out = resize ? nn::infer_controls(*net_, *weights_,
                                                 dataset::resize_image(input.frame, static_cast<int>(spec.input_width),
                                                                       static_cast<int>(spec.input_height)))
                            : nn::infer_controls(*net_, *weights_, input.frame);
    return {out.steering, out.throttle};
}

}  // namespace pilotstack::drive
