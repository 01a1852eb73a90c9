#include "pilotstack/drive/actuation.hpp"

#include <algorithm>
#include <cmath>

#include "pilotstack/errors.hpp"

namespace pilotstack::drive {

void LoopConfig::validate() const {
    if (!(rate_hz >= 5.0 && rate_hz <= 100.0)) throw ConfigError("loop.rate_hz must lie in [5, 100]");
    if (!(servo_min_us < servo_center_us && servo_center_us < servo_max_us)) {
        throw ConfigError("loop servo range must satisfy min_us < center_us < max_us");
    }
    if (!(pwm_frame_hz > 0.0) || servo_max_us >= 1e6 / pwm_frame_hz) {
        throw ConfigError("loop.pwm_frame_hz must leave room for the longest servo pulse");
    }
    if (!(throttle_deadband >= 0.0 && throttle_deadband < 1.0)) throw ConfigError("loop.throttle_deadband must lie in [0, 1)");
    if (!(autopilot_throttle_cap >= 0.0 && autopilot_throttle_cap <= 1.0)) {
        throw ConfigError("loop.autopilot_throttle_cap must lie in [0, 1]");
    }
    if (!(teleop_hold_timeout_s > 0.0)) throw ConfigError("loop.teleop_hold_timeout_s must be positive");
}

double clamp_unit(double v) {
    if (std::isnan(v)) return 0.0;
    return std::clamp(v, -1.0, 1.0);
}

double steering_to_pulse(double steering_norm, const LoopConfig& cfg) {
    const double s = clamp_unit(steering_norm);
    if (s >= 0.0) return cfg.servo_center_us + s * (cfg.servo_max_us - cfg.servo_center_us);
    return cfg.servo_center_us + s * (cfg.servo_center_us - cfg.servo_min_us);
}

double pulse_to_steering(double pulse_us, const LoopConfig& cfg) {
    const double p = std::clamp(pulse_us, cfg.servo_min_us, cfg.servo_max_us);
    if (p >= cfg.servo_center_us) return (p - cfg.servo_center_us) / (cfg.servo_max_us - cfg.servo_center_us);
    return (p - cfg.servo_center_us) / (cfg.servo_center_us - cfg.servo_min_us);
}

MotorDrive throttle_to_drive(double throttle_norm, const LoopConfig& cfg) {
    const double t = clamp_unit(throttle_norm);
    if (t > cfg.throttle_deadband) return {t, MotorDirection::forward};
    return {0.0, MotorDirection::brake};
}

std::uint16_t pca9685_counts(double on_time_us, double frame_hz) {
    const double frame_us = 1e6 / frame_hz;
    const double counts = std::round(on_time_us / frame_us * 4096.0);
    return static_cast<std::uint16_t>(std::clamp(counts, 0.0, 4095.0));
}

ActuationCommand to_actuation(double steering_norm, double throttle_norm, const LoopConfig& cfg) {
    ActuationCommand cmd;
    cmd.servo_pulse_us = steering_to_pulse(steering_norm, cfg);
    const MotorDrive motor = throttle_to_drive(throttle_norm, cfg);
    cmd.motor_duty = motor.duty;
    cmd.motor_direction = motor.direction;
    cmd.servo_counts = pca9685_counts(cmd.servo_pulse_us, cfg.pwm_frame_hz);
    cmd.motor_counts = static_cast<std::uint16_t>(std::round(cmd.motor_duty * 4095.0));
    return cmd;
}

AppliedControls applied_controls(const ActuationCommand& cmd, const LoopConfig& cfg) {
    return {pulse_to_steering(cmd.servo_pulse_us, cfg),
            cmd.motor_direction == MotorDirection::forward ? cmd.motor_duty : 0.0};
}

}  // namespace pilotstack::drive
