#include "pilotstack/drive/lap.hpp"

#include <algorithm>
#include <cmath>

namespace pilotstack::drive {

bool LapSession::all_completed() const {
    return !laps.empty() && std::all_of(laps.begin(), laps.end(), [](const LapReport& r) { return r.completed; });
}

LapSession eval_lap(World world, std::shared_ptr<Pilot> pilot, const LoopConfig& cfg, const LapRunOptions& opts) {
    world.state = sim::start_state(world.track, opts.start_progress_m);
    world.tick = 0;
    const double perimeter = world.track.perimeter();
    const double half_lane = world.track.lane_width() / 2.0;

    ControlLoop loop(std::move(world), cfg, DriveMode::autopilot);
    loop.set_autopilot(std::move(pilot));

    LapSession session;
    session.perimeter_m = perimeter;
    const double dt = cfg.period_s();
    const auto& tr = loop.world().track;

    double progress = tr.project({loop.world().state.x_m, loop.world().state.y_m}).progress_m;
    double unwrapped = 0.0;
    double time = 0.0;
    double lap_start = 0.0;
    LapReport current{1, false, 0.0, 0.0, 0.0, ""};

    while (static_cast<int>(session.laps.size()) < opts.laps) {
        const TickReport report = loop.tick();
        ++session.ticks;
        session.trajectory.push_back(report.state);
        const double t_next = time + dt;
        if (!report.error.empty()) {
            current.reason = "error";
            current.lap_time_s = t_next - lap_start;
            session.laps.push_back(current);
            break;
        }
        const auto proj = tr.project({report.state.x_m, report.state.y_m});
        const double prev_unwrapped = unwrapped;
        unwrapped += tr.progress_delta(progress, proj.progress_m);
        progress = proj.progress_m;
        const double offset = std::abs(proj.lateral_offset_m);
        current.max_abs_lateral_offset_m = std::max(current.max_abs_lateral_offset_m, offset);

        if (offset > half_lane) {
            current.reason = "off_track";
            current.lap_time_s = t_next - lap_start;
            session.laps.push_back(current);
            break;
        }
        const double target = perimeter * current.lap;
        if (unwrapped >= target) {
            const double frac = (target - prev_unwrapped) / (unwrapped - prev_unwrapped);
            const double crossing = time + frac * dt;
            current.completed = true;
            current.reason = "completed";
            current.lap_time_s = crossing - lap_start;
            current.mean_speed_mps = perimeter / current.lap_time_s;
            session.laps.push_back(current);
            lap_start = crossing;
            current = LapReport{current.lap + 1, false, 0.0, 0.0, offset, ""};
        } else if (t_next - lap_start > opts.timeout_s) {
            current.reason = "timeout";
            current.lap_time_s = t_next - lap_start;
            session.laps.push_back(current);
            break;
        }
        time = t_next;
    }
    return session;
}

nlohmann::json lap_report_to_json(const LapReport& r) {
    return {{"lap", r.lap},
            {"completed", r.completed},
            {"lap_time_s", r.lap_time_s},
            {"mean_speed_mps", r.mean_speed_mps},
            {"max_abs_lateral_offset_m", r.max_abs_lateral_offset_m},
            {"reason", r.reason}};
}

nlohmann::json lap_session_to_json(const LapSession& s, const std::string& pilot_name, double throttle_cap) {
    nlohmann::json laps = nlohmann::json::array();
    for (const auto& r : s.laps) laps.push_back(lap_report_to_json(r));
    return {{"schema_version", 1},
            {"pilot", pilot_name},
            {"perimeter_m", s.perimeter_m},
            {"throttle_cap", throttle_cap},
            {"all_completed", s.all_completed()},
            {"laps", laps}};
}

}  // namespace pilotstack::drive
