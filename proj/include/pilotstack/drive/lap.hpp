#pragma once

#include <memory>
#include <string>
#include <vector>

#include <json.hpp>

#include "pilotstack/drive/control_loop.hpp"

namespace pilotstack::drive {

struct LapReport {
    int lap = 0;
    bool completed = false;
    double lap_time_s = 0.0;
    double mean_speed_mps = 0.0;  // perimeter / lap_time for completed laps
    double max_abs_lateral_offset_m = 0.0;
    std::string reason;  // completed | off_track | timeout | error
};

struct LapRunOptions {
    int laps = 1;
    double timeout_s = 60.0;  // per lap
    double start_progress_m = 0.0;
};

struct LapSession {
    std::vector<LapReport> laps;
    std::int64_t ticks = 0;
    double perimeter_m = 0.0;
    std::vector<sim::VehicleState> trajectory;  // state after every tick

    bool all_completed() const;
};

/// Drives `pilot` in autopilot mode from rest at the start line, without a
/// real-time clock, until `laps` laps complete, the car leaves the lane
/// (|lateral offset| > lane_width / 2) or a lap times out. Crossing times
/// are interpolated between ticks.
LapSession eval_lap(World world, std::shared_ptr<Pilot> pilot, const LoopConfig& cfg, const LapRunOptions& opts = {});

nlohmann::json lap_report_to_json(const LapReport& r);
/// Document matching schemas/lap_report.schema.json.
nlohmann::json lap_session_to_json(const LapSession& s, const std::string& pilot_name, double throttle_cap);

}  // namespace pilotstack::drive
