#include "pilotstack/drive/control_loop.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <stdexcept>
#include <thread>

namespace pilotstack::drive {

double SteadyClock::now_s() {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - origin_).count();
}

void SteadyClock::sleep_until(double t_s) {
    const auto target = origin_ + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                      std::chrono::duration<double>(t_s));
    std::this_thread::sleep_until(target);
}

void ControlMailbox::post_drive(double steering, double throttle) {
    std::lock_guard lock(mu_);
    teleop_.steering = steering;
    teleop_.throttle = throttle;
    ++teleop_.sequence;
}

void ControlMailbox::post_mode(DriveMode mode) {
    std::lock_guard lock(mu_);
    mode_ = mode;
    stop_latched_ = false;
}

void ControlMailbox::post_stop() {
    std::lock_guard lock(mu_);
    stop_requested_ = true;
    stop_latched_ = true;
    mode_.reset();
}

ControlMailbox::Snapshot ControlMailbox::take() {
    std::lock_guard lock(mu_);
    Snapshot s{teleop_, mode_, stop_requested_, stop_latched_};
    mode_.reset();
    stop_requested_ = false;
    return s;
}

World::World(sim::Track t, sim::VehicleParams v, sim::CameraModel c, sim::RenderStyle s)
    : track(std::move(t)), vehicle(v), camera(c), style(s), state(sim::start_state(track)) {}

nlohmann::json summary_to_json(const SessionSummary& s) {
    return {{"ticks", s.ticks},
            {"overruns", s.overruns},
            {"mean_latency_ms", s.mean_latency_ms},
            {"max_latency_ms", s.max_latency_ms},
            {"records_written", s.records_written},
            {"errors", s.errors},
            {"duration_s", s.duration_s}};
}

ControlLoop::ControlLoop(World world, LoopConfig cfg, DriveMode initial_mode)
    : world_(std::move(world)), cfg_(cfg), mode_(initial_mode) {
    cfg_.validate();
    status_.mode = mode_;
}

void ControlLoop::apply_mailbox(TickReport& report) {
    const auto mail = mailbox_.take();
    if (mail.stop_requested) {
        mode_ = DriveMode::manual;
        report.safe_stop = true;
    }
    if (mail.mode) {
        if (*mail.mode == DriveMode::autopilot && !autopilot_) {
            report.error = "autopilot requested but no model is loaded";
        } else {
            mode_ = *mail.mode;
        }
    }
    stop_latched_ = mail.stop_latched;
    if (mail.teleop.sequence != last_teleop_seq_) {
        last_teleop_seq_ = mail.teleop.sequence;
        last_teleop_time_s_ = static_cast<double>(world_.tick) * cfg_.period_s();
        teleop_ = mail.teleop;
    }
}

TickReport ControlLoop::tick() {
    TickReport report;
    report.tick = world_.tick;
    report.time_s = static_cast<double>(world_.tick) * cfg_.period_s();
    apply_mailbox(report);
    report.mode = mode_;

    auto frame = std::make_shared<const sim::ImageFrame>(
        sim::render_camera(world_.track, world_.state, world_.camera, world_.style));

    if (!report.safe_stop && !stop_latched_) {
        if (mode_ == DriveMode::autopilot) {
            try {
                if (!autopilot_) throw std::runtime_error("no autopilot loaded");
                report.requested =
                    autopilot_->decide({*frame, world_.state, world_.track, world_.vehicle, report.time_s});
                if (!std::isfinite(report.requested.steering) || !std::isfinite(report.requested.throttle)) {
                    throw std::runtime_error("pilot produced a non-finite command");
                }
            } catch (const std::exception& e) {
                report.error = std::string("inference failed: ") + e.what();
                report.safe_stop = true;
            }
        } else {
            const bool fresh = teleop_.sequence != 0 &&
                               report.time_s - last_teleop_time_s_ <= cfg_.teleop_hold_timeout_s + 1e-9;
            if (fresh) {
                report.requested = {teleop_.steering, teleop_.throttle};
            } else {
                report.safe_stop = true;
            }
        }
    } else {
        report.safe_stop = true;
    }

    double steering = 0.0;
    double throttle = 0.0;
    if (!report.safe_stop) {
        steering = clamp_unit(report.requested.steering);
        throttle = clamp_unit(report.requested.throttle);
        if (mode_ == DriveMode::autopilot) throttle = std::min(throttle, cfg_.autopilot_throttle_cap);
    }
    report.actuation = to_actuation(steering, throttle, cfg_);
    const AppliedControls applied = applied_controls(report.actuation, cfg_);
    report.steering = applied.steering;
    report.throttle = applied.throttle;

    const sim::VehicleState observed = world_.state;
    world_.state = sim::step_vehicle(world_.state, applied.throttle, applied.steering, cfg_.period_s(), world_.vehicle);
    report.state = world_.state;

    if (tub_ != nullptr && records_in(mode_)) {
        dataset::DriveRecord rec;
        rec.steering_norm = applied.steering;
        rec.throttle_norm = applied.throttle;
        rec.timestamp_ms = static_cast<std::int64_t>(std::llround(report.time_s * 1000.0));
        rec.mode = mode_;
        rec.speed_mps = observed.speed_mps;
        try {
            tub_->append(*frame, rec);
            report.recorded = true;
        } catch (const std::exception& e) {
            report.error = std::string("recording failed: ") + e.what();
        }
    }

    if (sink_ != nullptr) {
        const auto proj = world_.track.project({observed.x_m, observed.y_m});
        TelemetrySnapshot snap;
        snap.tick = report.tick;
        snap.timestamp_ms = static_cast<std::int64_t>(std::llround(report.time_s * 1000.0));
        snap.mode = mode_;
        snap.speed_mps = observed.speed_mps;
        snap.steering_norm = applied.steering;
        snap.throttle_norm = applied.throttle;
        snap.motor_duty = report.actuation.motor_duty;
        snap.pose = observed;
        snap.progress_m = proj.progress_m;
        snap.lateral_offset_m = proj.lateral_offset_m;
        snap.frame = frame;
        sink_->publish(std::move(snap));
    }

    ++world_.tick;
    return report;
}

void ControlLoop::update_status(const TickReport& report, double latency_s, bool overrun) {
    std::lock_guard lock(status_mu_);
    auto& s = status_.summary;
    ++s.ticks;
    if (overrun) ++s.overruns;
    if (report.recorded) ++s.records_written;
    if (!report.error.empty()) {
        ++s.errors;
        status_.last_error = report.error;
    }
    latency_sum_s_ += latency_s;
    s.mean_latency_ms = latency_sum_s_ / static_cast<double>(s.ticks) * 1000.0;
    s.max_latency_ms = std::max(s.max_latency_ms, latency_s * 1000.0);
    s.duration_s = static_cast<double>(world_.tick) * cfg_.period_s();
    status_.tick = world_.tick;
    status_.mode = mode_;
}

SessionSummary ControlLoop::run(Clock& clock, const std::atomic<bool>& stop, double max_duration_s) {
    const double period = cfg_.period_s();
    const double start = clock.now_s();
    double deadline = start;  // scheduled start of the next tick
    while (!stop.load(std::memory_order_relaxed)) {
        if (deadline - start >= max_duration_s - 1e-9) break;
        clock.sleep_until(deadline);
        if (stop.load(std::memory_order_relaxed)) break;
        const double t0 = clock.now_s();
        const TickReport report = tick();
        const double t1 = clock.now_s();
        const double due = deadline + period;
        const bool overrun = t1 > due;
        update_status(report, t1 - t0, overrun);
        deadline = due;
        // Late by more than a full period: run one catch-up tick now and drop
        // the rest of the backlog.
        if (t1 > deadline + period) deadline = t1 - period;
    }
    std::lock_guard lock(status_mu_);
    return status_.summary;
}

LoopStatus ControlLoop::status() const {
    std::lock_guard lock(status_mu_);
    return status_;
}

}  // namespace pilotstack::drive
