#include "pilotstack/sim/vehicle.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "pilotstack/errors.hpp"

namespace pilotstack::sim {

void VehicleParams::validate() const {
    auto positive = [](double v, const char* name) {
        if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(std::string("vehicle.") + name + " must be positive");
    };
    positive(wheelbase_m, "wheelbase_m");
    positive(track_width_m, "track_width_m");
    positive(length_m, "length_m");
    positive(width_m, "width_m");
    positive(mass_kg, "mass_kg");
    positive(max_steer_rad, "max_steer_rad");
    positive(max_speed_mps, "max_speed_mps");
    positive(speed_time_constant_s, "speed_time_constant_s");
    if (max_steer_rad >= std::numbers::pi / 2) throw ConfigError("vehicle.max_steer_rad must be below pi/2");
    if (wheelbase_m >= length_m) throw ConfigError("vehicle.wheelbase_m must be shorter than length_m");
    if (track_width_m >= width_m) throw ConfigError("vehicle.track_width_m must be narrower than width_m");
}

double wrap_angle(double angle_rad) {
    double a = std::remainder(angle_rad, 2.0 * std::numbers::pi);  // [-pi, pi]
    if (a <= -std::numbers::pi) a += 2.0 * std::numbers::pi;
    return a;
}

AckermannAngles ackermann_angles(double steer_rad, const VehicleParams& params) {
    if (!std::isfinite(steer_rad) || std::abs(steer_rad) > params.max_steer_rad) {
        throw DomainError("steering angle " + std::to_string(steer_rad) + " rad outside +/-" +
                          std::to_string(params.max_steer_rad));
    }
    if (steer_rad == 0.0) return {0.0, 0.0};

    const double wheelbase = params.wheelbase_m;
    const double half_track = 0.5 * params.track_width_m;
    const double radius = wheelbase / std::tan(std::abs(steer_rad));
    const double inner = std::atan2(wheelbase, radius - half_track);
    const double outer = std::atan2(wheelbase, radius + half_track);
    const double sign = steer_rad > 0.0 ? 1.0 : -1.0;
    return {sign * inner, sign * outer};
}

double turning_radius(double steer_rad, const VehicleParams& params) {
    if (steer_rad == 0.0) return std::numeric_limits<double>::infinity();
    return params.wheelbase_m / std::tan(std::abs(steer_rad));
}

VehicleState step_vehicle(const VehicleState& state, double throttle_norm, double steer_norm, double dt_s,
                          const VehicleParams& params) {
    if (!std::isfinite(throttle_norm) || !std::isfinite(steer_norm) || !std::isfinite(dt_s)) {
        throw DomainError("step_vehicle: non-finite input");
    }
    if (!(dt_s > 0.0) || dt_s > 0.1) throw DomainError("step_vehicle: dt must lie in (0, 0.1] s");

    throttle_norm = std::clamp(throttle_norm, -1.0, 1.0);
    steer_norm = std::clamp(steer_norm, -1.0, 1.0);

    VehicleState next = state;
    next.steer_rad = steer_norm * params.max_steer_rad;
    const double target_speed = std::max(0.0, throttle_norm) * params.max_speed_mps;
    const double yaw_gain = std::tan(next.steer_rad) / params.wheelbase_m;

    const int substeps = std::max(1, static_cast<int>(std::ceil(dt_s / kMaxSubstep_s - 1e-9)));
    const double h = dt_s / substeps;
    const double lag = h / params.speed_time_constant_s;

    for (int i = 0; i < substeps; ++i) {
        const double v = next.speed_mps;
        next.x_m += v * std::cos(next.heading_rad) * h;
        next.y_m += v * std::sin(next.heading_rad) * h;
        next.heading_rad += v * yaw_gain * h;
        next.speed_mps = std::max(0.0, v + (target_speed - v) * lag);
    }
    next.heading_rad = wrap_angle(next.heading_rad);
    return next;
}

}  // namespace pilotstack::sim
