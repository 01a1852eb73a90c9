#pragma once

#include <functional>
#include <memory>
#include <string>

#include "pilotstack/nn/network.hpp"
#include "pilotstack/sim/image.hpp"
#include "pilotstack/sim/track.hpp"
#include "pilotstack/sim/vehicle.hpp"

namespace pilotstack::drive {

struct PilotCommand {
    double steering = 0.0;
    double throttle = 0.0;
};

/// Everything a pilot may look at during one tick. Learned pilots only use
/// the frame; the reference pilot uses ground truth.
struct PilotInput {
    const sim::ImageFrame& frame;
    const sim::VehicleState& state;
    const sim::Track& track;
    const sim::VehicleParams& vehicle;
    double time_s = 0.0;
};

class Pilot {
public:
    virtual ~Pilot() = default;
    virtual std::string name() const = 0;
    /// May throw; the control loop turns any exception into a safe stop.
    virtual PilotCommand decide(const PilotInput& input) = 0;
};

/// Geometric path tracker: steers toward the centerline point `lookahead_m`
/// ahead of the nearest point, at a constant target speed.
class PurePursuitPilot final : public Pilot {
public:
    PurePursuitPilot(double target_speed_mps, double lookahead_m = 0.4)
        : target_speed_mps_(target_speed_mps), lookahead_m_(lookahead_m) {}

    std::string name() const override { return "pure-pursuit"; }
    PilotCommand decide(const PilotInput& input) override;

    /// Steering for a pose, without the throttle; shared with the data generator.
    double steering_for(const sim::VehicleState& state, const sim::Track& track,
                        const sim::VehicleParams& vehicle) const;

private:
    double target_speed_mps_;
    double lookahead_m_;
};

class ConstantPilot final : public Pilot {
public:
    ConstantPilot(double steering, double throttle) : cmd_{steering, throttle} {}
    std::string name() const override { return "constant"; }
    PilotCommand decide(const PilotInput&) override { return cmd_; }

private:
    PilotCommand cmd_;
};

class FunctionPilot final : public Pilot {
public:
    using Fn = std::function<PilotCommand(const PilotInput&)>;
    explicit FunctionPilot(Fn fn, std::string name = "function") : fn_(std::move(fn)), name_(std::move(name)) {}
    std::string name() const override { return name_; }
    PilotCommand decide(const PilotInput& input) override { return fn_(input); }

private:
    Fn fn_;
    std::string name_;
};

/// Behavioral-cloning pilot: runs the CNN on the camera frame, resizing it to
/// the model input when sizes differ.
class CnnPilot final : public Pilot {
public:
    CnnPilot(std::shared_ptr<const nn::Network<float>> net, std::shared_ptr<const nn::ModelWeights<float>> weights);

    std::string name() const override { return "cnn"; }
    PilotCommand decide(const PilotInput& input) override;

private:
    std::shared_ptr<const nn::Network<float>> net_;
    std::shared_ptr<const nn::ModelWeights<float>> weights_;
};

}  // namespace pilotstack::drive
