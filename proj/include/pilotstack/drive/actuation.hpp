#pragma once

#include <cstdint>
#include <string_view>

namespace pilotstack::drive {

enum class MotorDirection { forward, brake };

inline std::string_view to_string(MotorDirection d) { return d == MotorDirection::forward ? "forward" : "brake"; }

struct LoopConfig {
    double rate_hz = 20.0;
    double servo_min_us = 1000.0;
    double servo_center_us = 1500.0;
    double servo_max_us = 2000.0;
    double pwm_frame_hz = 50.0;
    double throttle_deadband = 0.05;
    double autopilot_throttle_cap = 1.0;  // fraction of max speed
    double teleop_hold_timeout_s = 0.5;

    double period_s() const { return 1.0 / rate_hz; }
    void validate() const;
};

/// What the PWM hardware would receive: servo pulse width plus H-bridge duty
/// and direction, with the PCA9685 12-bit register counts for both channels.
struct ActuationCommand {
    double servo_pulse_us = 1500.0;
    double motor_duty = 0.0;
    MotorDirection motor_direction = MotorDirection::brake;
    std::uint16_t servo_counts = 0;
    std::uint16_t motor_counts = 0;

    friend bool operator==(const ActuationCommand&, const ActuationCommand&) = default;
};

/// Piecewise-linear: -1 -> min, 0 -> center, +1 -> max. Input is clamped first.
double steering_to_pulse(double steering_norm, const LoopConfig& cfg);

/// Inverse of steering_to_pulse over [min_us, max_us].
double pulse_to_steering(double pulse_us, const LoopConfig& cfg);

struct MotorDrive {
    double duty = 0.0;
    MotorDirection direction = MotorDirection::brake;
};

/// Deadband around zero brakes; positive throttle passes through as duty.
/// Reverse is disabled, so negative throttle also brakes.
MotorDrive throttle_to_drive(double throttle_norm, const LoopConfig& cfg);

/// counts = round(on_time / frame_time * 4096), capped at 4095.
std::uint16_t pca9685_counts(double on_time_us, double frame_hz);

ActuationCommand to_actuation(double steering_norm, double throttle_norm, const LoopConfig& cfg);

/// Normalized (steering, throttle) actually realized by an actuation command;
/// this is what the simulated car is driven with.
struct AppliedControls {
    double steering = 0.0;
    double throttle = 0.0;
};
AppliedControls applied_controls(const ActuationCommand& cmd, const LoopConfig& cfg);

double clamp_unit(double v);

}  // namespace pilotstack::drive
