#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include <json.hpp>

#include "pilotstack/dataset/tub.hpp"
#include "pilotstack/drive/actuation.hpp"
#include "pilotstack/drive/pilots.hpp"
#include "pilotstack/drive_mode.hpp"
#include "pilotstack/sim/camera.hpp"
#include "pilotstack/sim/track.hpp"
#include "pilotstack/sim/vehicle.hpp"

namespace pilotstack::drive {

class Clock {
public:
    virtual ~Clock() = default;
    virtual double now_s() = 0;
    virtual void sleep_until(double t_s) = 0;
};

class SteadyClock final : public Clock {
public:
    SteadyClock() : origin_(std::chrono::steady_clock::now()) {}
    double now_s() override;
    void sleep_until(double t_s) override;

private:
    std::chrono::steady_clock::time_point origin_;
};

/// Manually advanced clock for deterministic scheduling tests. Sleeping jumps
/// straight to the wake-up time; `advance` models work that takes time.
class SimulatedClock final : public Clock {
public:
    double now_s() override { return now_; }
    void sleep_until(double t_s) override {
        if (t_s > now_) now_ = t_s;
    }
    void advance(double dt_s) { now_ += dt_s; }

private:
    double now_ = 0.0;
};

struct TeleopCommand {
    double steering = 0.0;
    double throttle = 0.0;
    std::uint64_t sequence = 0;  // 0 means no command received yet
};

/// Thread-safe intake between clients and the control loop. Drive commands
/// have latest-value semantics; a stop is latched until a mode command
/// arrives.
class ControlMailbox {
public:
    void post_drive(double steering, double throttle);
    void post_mode(DriveMode mode);
    void post_stop();

    struct Snapshot {
        TeleopCommand teleop;
        std::optional<DriveMode> mode;  // pending mode change, consumed by take()
        bool stop_requested = false;    // consumed by take()
        bool stop_latched = false;
    };
    Snapshot take();

private:
    std::mutex mu_;
    TeleopCommand teleop_;
    std::optional<DriveMode> mode_;
    bool stop_requested_ = false;
    bool stop_latched_ = false;
};

/// What the loop hands to telemetry after each tick.
struct TelemetrySnapshot {
    std::int64_t tick = 0;
    std::int64_t timestamp_ms = 0;
    DriveMode mode = DriveMode::manual;
    double speed_mps = 0.0;
    double steering_norm = 0.0;
    double throttle_norm = 0.0;
    double motor_duty = 0.0;
    sim::VehicleState pose;
    double progress_m = 0.0;
    double lateral_offset_m = 0.0;
    std::shared_ptr<const sim::ImageFrame> frame;
};

/// Receives snapshots from the loop thread. Implementations must return
/// promptly and never wait on consumers.
class TelemetrySink {
public:
    virtual ~TelemetrySink() = default;
    virtual void publish(TelemetrySnapshot snapshot) = 0;
};

struct World {
    sim::Track track;
    sim::VehicleParams vehicle;
    sim::CameraModel camera;
    sim::RenderStyle style;
    sim::VehicleState state;
    std::int64_t tick = 0;

    explicit World(sim::Track t, sim::VehicleParams v = {}, sim::CameraModel c = {}, sim::RenderStyle s = {});
};

struct TickReport {
    std::int64_t tick = 0;
    double time_s = 0.0;
    DriveMode mode = DriveMode::manual;
    PilotCommand requested;  // raw pilot or teleop output
    double steering = 0.0;   // as applied to the car
    double throttle = 0.0;
    ActuationCommand actuation;
    sim::VehicleState state;  // after the step
    bool safe_stop = false;
    bool recorded = false;
    std::string error;
};

struct SessionSummary {
    std::int64_t ticks = 0;
    std::int64_t overruns = 0;
    double mean_latency_ms = 0.0;
    double max_latency_ms = 0.0;
    std::int64_t records_written = 0;
    std::int64_t errors = 0;
    double duration_s = 0.0;
};

nlohmann::json summary_to_json(const SessionSummary& s);

/// Thread-safe view of the loop for health checks.
struct LoopStatus {
    std::int64_t tick = 0;
    DriveMode mode = DriveMode::manual;
    SessionSummary summary;
    std::string last_error;
};

class ControlLoop {
public:
    ControlLoop(World world, LoopConfig cfg, DriveMode initial_mode = DriveMode::manual);

    void set_autopilot(std::shared_ptr<Pilot> pilot) { autopilot_ = std::move(pilot); }
    /// Recording target; must be writable and outlive the loop.
    void set_tub(dataset::Tub* tub) { tub_ = tub; }
    void set_sink(TelemetrySink* sink) { sink_ = sink; }

    ControlMailbox& mailbox() { return mailbox_; }
    const World& world() const { return world_; }
    const LoopConfig& config() const { return cfg_; }
    DriveMode mode() const { return mode_; }

    /// One control cycle at simulated time tick / rate_hz.
    TickReport tick();

    /// Fixed-timestep scheduling until `stop` is set or `max_duration_s`
    /// elapses. A late tick is followed by at most one immediate catch-up tick;
    /// further missed ticks are dropped.
    SessionSummary run(Clock& clock, const std::atomic<bool>& stop, double max_duration_s);

    LoopStatus status() const;

private:
    void apply_mailbox(TickReport& report);
    void update_status(const TickReport& report, double latency_s, bool overrun);

    World world_;
    LoopConfig cfg_;
    DriveMode mode_;
    std::shared_ptr<Pilot> autopilot_;
    dataset::Tub* tub_ = nullptr;
    TelemetrySink* sink_ = nullptr;
    ControlMailbox mailbox_;

    bool stop_latched_ = false;
    std::uint64_t last_teleop_seq_ = 0;
    double last_teleop_time_s_ = -1.0;
    TeleopCommand teleop_;

    mutable std::mutex status_mu_;
    LoopStatus status_;
    double latency_sum_s_ = 0.0;
};

}  // namespace pilotstack::drive
