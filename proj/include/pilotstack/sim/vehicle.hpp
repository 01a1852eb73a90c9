#pragma once

#include <numbers>

namespace pilotstack::sim {

/// Physical constants of the simulated car. Body dimensions follow the
/// competition chassis (330 x 190 mm, 2.2 kg); the steering geometry and
/// drivetrain limits are tunable defaults.
struct VehicleParams {
    double wheelbase_m = 0.20;
    double track_width_m = 0.16;
    double length_m = 0.33;
    double width_m = 0.19;
    double mass_kg = 2.2;
    double max_steer_rad = 0.45;
    double max_speed_mps = 2.0;
    double speed_time_constant_s = 0.5;

    /// Throws ConfigError naming the first violated constraint.
    void validate() const;
};

/// Pose of the rear-axle center in the world frame plus the commanded
/// front steering angle.
struct VehicleState {
    double x_m = 0.0;
    double y_m = 0.0;
    double heading_rad = 0.0;  // wrapped to (-pi, pi]
    double speed_mps = 0.0;
    double steer_rad = 0.0;

    friend bool operator==(const VehicleState&, const VehicleState&) = default;
};

/// Signed front-wheel angles. `inner` belongs to the wheel on the inside of
/// the turn (left wheel for positive steer, right wheel for negative).
struct AckermannAngles {
    double inner_rad = 0.0;
    double outer_rad = 0.0;

    double left_rad(double steer_rad) const { return steer_rad >= 0.0 ? inner_rad : outer_rad; }
    double right_rad(double steer_rad) const { return steer_rad >= 0.0 ? outer_rad : inner_rad; }
};

double wrap_angle(double angle_rad);

/// Per-wheel angles for a bicycle-equivalent steering angle, satisfying
/// cot(outer) - cot(inner) = track_width / wheelbase.
AckermannAngles ackermann_angles(double steer_rad, const VehicleParams& params);

/// Radius of the rear-axle circle for a steering angle; infinite at zero.
double turning_radius(double steer_rad, const VehicleParams& params);

/// Advances the kinematic bicycle model by `dt_s`. Speed follows a first-order
/// lag toward max(0, throttle) * max_speed; integration is explicit Euler
/// sub-stepped at no more than 1 ms.
VehicleState step_vehicle(const VehicleState& state, double throttle_norm, double steer_norm, double dt_s,
                          const VehicleParams& params);

inline constexpr double kMaxSubstep_s = 1e-3;

}  // namespace pilotstack::sim
