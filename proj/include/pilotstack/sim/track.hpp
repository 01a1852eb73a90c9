#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "pilotstack/sim/vehicle.hpp"

namespace pilotstack::sim {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    friend Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
    friend Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
    friend Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }
    friend bool operator==(const Vec2&, const Vec2&) = default;
};

inline double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
inline double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
double norm(Vec2 a);

/// Closed-loop centerline. The last waypoint connects back to the first; a
/// repeated first point at the end is accepted and dropped on load.
struct TrackSpec {
    std::vector<Vec2> centerline;
    double lane_width_m = 0.6;
    Vec2 bounds_m{5.0, 5.0};
};

/// Throws ConfigError describing the first violated invariant.
void validate_track(const TrackSpec& spec, double vehicle_width_m = VehicleParams{}.width_m);

nlohmann::json track_to_json(const TrackSpec& spec);
TrackSpec track_from_json(const nlohmann::json& doc);
TrackSpec load_track(const std::filesystem::path& path);
void save_track(const TrackSpec& spec, const std::filesystem::path& path);

/// Rounded-rectangle circuit with one chicane, 13 m long inside a 5 x 5 m arena.
TrackSpec make_default_track();

struct TrackProjection {
    double progress_m = 0.0;        // arc length of the nearest centerline point, [0, perimeter)
    double lateral_offset_m = 0.0;  // positive left of the direction of travel
    std::size_t segment = 0;
    Vec2 point;
    Vec2 tangent;  // unit direction of the nearest segment
};

/// Validated track with arc-length bookkeeping and a spatial index for the
/// camera renderer.
class Track {
public:
    explicit Track(TrackSpec spec);

    const TrackSpec& spec() const { return spec_; }
    double perimeter() const { return perimeter_; }
    double lane_width() const { return spec_.lane_width_m; }
    std::size_t segment_count() const { return spec_.centerline.size(); }

    TrackProjection project(Vec2 p) const;
    Vec2 point_at(double progress_m) const;
    double heading_at(double progress_m) const;
    /// Cumulative arc length at waypoint i (i == segment_count() gives the perimeter).
    double waypoint_progress(std::size_t i) const { return cumulative_[i]; }

    /// Unsigned distance to the centerline when it is within `index_reach()`;
    /// negative when the point is farther than that.
    double near_distance(Vec2 p) const;
    double index_reach() const { return reach_; }

    /// Forward progress from `from_m` to `to_m`, unwrapped across the start line.
    double progress_delta(double from_m, double to_m) const;

private:
    Vec2 seg_start(std::size_t i) const { return spec_.centerline[i]; }
    Vec2 seg_end(std::size_t i) const { return spec_.centerline[(i + 1) % spec_.centerline.size()]; }
    double segment_distance(std::size_t i, Vec2 p) const;
    void build_index();

    TrackSpec spec_;
    std::vector<double> cumulative_;
    double perimeter_ = 0.0;

    double reach_ = 0.0;
    // Uniform grid; each cell lists the segments that can be nearest to one
    // of its points, sorted by a lower bound on their distance.
    double cell_ = 0.03;
    Vec2 grid_origin_;
    int grid_cols_ = 0;
    int grid_rows_ = 0;
    std::vector<std::uint32_t> cell_begin_;
    std::vector<std::uint32_t> cand_segment_;
    std::vector<double> cand_bound_;
};

double lateral_offset(const Track& track, const VehicleState& state);
double track_progress(const Track& track, const VehicleState& state);

/// Vehicle state at rest on the centerline at `progress_m`, heading along the track.
VehicleState start_state(const Track& track, double progress_m = 0.0);

}  // namespace pilotstack::sim
