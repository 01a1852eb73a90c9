#include "pilotstack/sim/track.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "pilotstack/errors.hpp"

namespace pilotstack::sim {

using nlohmann::json;

double norm(Vec2 a) { return std::hypot(a.x, a.y); }

namespace {

std::string fmt_point(std::size_t i, Vec2 p) {
    std::ostringstream os;
    os << "waypoint " << i << " (" << p.x << ", " << p.y << ")";
    return os.str();
}

std::vector<Vec2> drop_closing_duplicate(std::vector<Vec2> pts) {
    if (pts.size() >= 2 && pts.front() == pts.back()) pts.pop_back();
    return pts;
}

}  // namespace

void validate_track(const TrackSpec& spec, double vehicle_width_m) {
    const auto& pts = spec.centerline;
    if (pts.size() < 8) throw ConfigError("track needs at least 8 waypoints, got " + std::to_string(pts.size()));
    if (!(spec.bounds_m.x > 0.0) || !(spec.bounds_m.y > 0.0)) throw ConfigError("track bounds must be positive");
    if (!(spec.lane_width_m > vehicle_width_m)) {
        throw ConfigError("lane_width_m " + std::to_string(spec.lane_width_m) + " must exceed the vehicle width " +
                          std::to_string(vehicle_width_m));
    }
    for (std::size_t i = 0; i < pts.size(); ++i) {
        const Vec2 p = pts[i];
        if (!std::isfinite(p.x) || !std::isfinite(p.y)) throw ConfigError(fmt_point(i, p) + " is not finite");
        if (p.x < 0.0 || p.y < 0.0 || p.x > spec.bounds_m.x || p.y > spec.bounds_m.y) {
            throw ConfigError(fmt_point(i, p) + " lies outside the arena bounds");
        }
        const Vec2 q = pts[(i + 1) % pts.size()];
        if (p == q) throw ConfigError("degenerate zero-length segment at " + fmt_point(i, p));
    }
}

json track_to_json(const TrackSpec& spec) {
    json pts = json::array();
    for (const auto& p : spec.centerline) pts.push_back({p.x, p.y});
    return json{{"lane_width_m", spec.lane_width_m},
                {"bounds_m", {spec.bounds_m.x, spec.bounds_m.y}},
                {"centerline", std::move(pts)}};
}

TrackSpec track_from_json(const json& doc) {
    TrackSpec spec;
    try {
        spec.lane_width_m = doc.at("lane_width_m").get<double>();
        const auto& b = doc.at("bounds_m");
        if (!b.is_array() || b.size() != 2) throw ConfigError("track bounds_m must be [width, height]");
        spec.bounds_m = {b[0].get<double>(), b[1].get<double>()};
        for (const auto& p : doc.at("centerline")) {
            if (!p.is_array() || p.size() != 2) throw ConfigError("track centerline entries must be [x, y]");
            spec.centerline.push_back({p[0].get<double>(), p[1].get<double>()});
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed track document: ") + e.what());
    }
    spec.centerline = drop_closing_duplicate(std::move(spec.centerline));
    validate_track(spec);
    return spec;
}

TrackSpec load_track(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open track file: " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("track file " + path.string() + " is not valid JSON: " + e.what());
    }
    try {
        return track_from_json(doc);
    } catch (const ConfigError& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

void save_track(const TrackSpec& spec, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write track file: " + path.string());
    out << track_to_json(spec).dump(1) << '\n';
}

namespace {

// Turtle that lays down straights and arcs at a fixed sampling step.
class TrackBuilder {
public:
    explicit TrackBuilder(double step_m) : step_(step_m) {}

    void straight(double length) {
        const int n = std::max(1, static_cast<int>(std::ceil(length / step_)));
        const Vec2 start = pos_;
        const Vec2 dir{std::cos(heading_), std::sin(heading_)};
        for (int i = 1; i <= n; ++i) emit(start + (length * i / n) * dir);
        pos_ = start + length * dir;
    }

    // Positive angle turns left.
    void arc(double radius, double angle) {
        const double side = angle > 0.0 ? 1.0 : -1.0;
        const Vec2 center = pos_ + (side * radius) * Vec2{-std::sin(heading_), std::cos(heading_)};
        const double start_angle = std::atan2(pos_.y - center.y, pos_.x - center.x);
        const int n = std::max(1, static_cast<int>(std::ceil(radius * std::abs(angle) / step_)));
        for (int i = 1; i <= n; ++i) {
            const double a = start_angle + angle * i / n;
            emit(center + radius * Vec2{std::cos(a), std::sin(a)});
        }
        heading_ += angle;
        pos_ = center + radius * Vec2{std::cos(start_angle + angle), std::sin(start_angle + angle)};
    }

    std::vector<Vec2> finish() {
        // The turtle returns to the origin; the final sample duplicates the first.
        auto pts = std::move(points_);
        if (!pts.empty() && norm(pts.back() - Vec2{}) < 1e-9) pts.pop_back();
        pts.insert(pts.begin(), Vec2{});
        return pts;
    }

private:
    void emit(Vec2 p) { points_.push_back(p); }

    double step_;
    Vec2 pos_{};
    double heading_ = 0.0;
    std::vector<Vec2> points_;
};

}  // namespace

TrackSpec make_default_track() {
    constexpr double kTargetLength = 13.0;
    constexpr double kCornerRadius = 0.6;
    constexpr double kChicaneRadius = 0.7;
    constexpr double kChicaneAngle = 0.7;
    constexpr double kChicaneMiddle = 0.3;
    constexpr double kLeadIn = 0.4;
    constexpr double kStep = 0.02;
    constexpr double kQuarter = std::numbers::pi / 2;

    // Bottom side: lead-in, chicane (left, right, straight, right, left), lead-out.
    const double bottom_advance = 2 * kLeadIn + 4 * kChicaneRadius * std::sin(kChicaneAngle) + kChicaneMiddle;
    const double bottom_length = 2 * kLeadIn + 4 * kChicaneRadius * kChicaneAngle + kChicaneMiddle;
    const double corners = 2 * std::numbers::pi * kCornerRadius;
    const double side = 0.5 * (kTargetLength - bottom_length - bottom_advance - corners);

    TrackBuilder b(kStep);
    b.straight(kLeadIn);
    b.arc(kChicaneRadius, kChicaneAngle);
    b.arc(kChicaneRadius, -kChicaneAngle);
    b.straight(kChicaneMiddle);
    b.arc(kChicaneRadius, -kChicaneAngle);
    b.arc(kChicaneRadius, kChicaneAngle);
    b.straight(kLeadIn);
    b.arc(kCornerRadius, kQuarter);
    b.straight(side);
    b.arc(kCornerRadius, kQuarter);
    b.straight(bottom_advance);
    b.arc(kCornerRadius, kQuarter);
    b.straight(side);
    b.arc(kCornerRadius, kQuarter);

    TrackSpec spec;
    spec.lane_width_m = 0.6;
    spec.bounds_m = {5.0, 5.0};
    spec.centerline = b.finish();

    // Center the circuit in the arena.
    double min_x = 1e9, max_x = -1e9, min_y = 1e9, max_y = -1e9;
    for (const auto& p : spec.centerline) {
        min_x = std::min(min_x, p.x);
        max_x = std::max(max_x, p.x);
        min_y = std::min(min_y, p.y);
        max_y = std::max(max_y, p.y);
    }
    const Vec2 shift{0.5 * (spec.bounds_m.x - (max_x - min_x)) - min_x,
                     0.5 * (spec.bounds_m.y - (max_y - min_y)) - min_y};
    for (auto& p : spec.centerline) p = p + shift;
    validate_track(spec);
    return spec;
}

Track::Track(TrackSpec spec) : spec_(std::move(spec)) {
    spec_.centerline = drop_closing_duplicate(std::move(spec_.centerline));
    const auto n = spec_.centerline.size();
    if (n < 2) throw ConfigError("track needs at least two waypoints");
    cumulative_.resize(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double len = norm(seg_end(i) - seg_start(i));
        if (!(len > 0.0)) throw ConfigError("degenerate zero-length track segment at waypoint " + std::to_string(i));
        cumulative_[i + 1] = cumulative_[i] + len;
    }
    perimeter_ = cumulative_[n];
    if (!(spec_.lane_width_m > 0.0)) throw ConfigError("lane width must be positive");
    build_index();
}

double Track::segment_distance(std::size_t i, Vec2 p) const {
    const Vec2 a = seg_start(i);
    const Vec2 d = seg_end(i) - a;
    const double t = std::clamp(dot(p - a, d) / dot(d, d), 0.0, 1.0);
    return norm(p - (a + t * d));
}

TrackProjection Track::project(Vec2 p) const {
    TrackProjection best;
    double best_d2 = std::numeric_limits<double>::infinity();
    double best_t = 0.0;
    for (std::size_t i = 0; i < spec_.centerline.size(); ++i) {
        const Vec2 a = seg_start(i);
        const Vec2 d = seg_end(i) - a;
        const double t = std::clamp(dot(p - a, d) / dot(d, d), 0.0, 1.0);
        const Vec2 q = a + t * d;
        const Vec2 e = p - q;
        const double d2 = dot(e, e);
        if (d2 < best_d2) {
            best_d2 = d2;
            best_t = t;
            best.segment = i;
            best.point = q;
        }
    }
    const std::size_t i = best.segment;
    const Vec2 d = seg_end(i) - seg_start(i);
    const double len = cumulative_[i + 1] - cumulative_[i];
    best.tangent = (1.0 / len) * d;
    best.progress_m = cumulative_[i] + best_t * len;
    if (best.progress_m >= perimeter_) best.progress_m -= perimeter_;
    const double dist = std::sqrt(best_d2);
    const double side = cross(best.tangent, p - best.point);
    best.lateral_offset_m = side > 0.0 ? dist : (side < 0.0 ? -dist : 0.0);
    return best;
}

Vec2 Track::point_at(double progress_m) const {
    double s = std::fmod(progress_m, perimeter_);
    if (s < 0.0) s += perimeter_;
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), s);
    std::size_t i = static_cast<std::size_t>(std::distance(cumulative_.begin(), it)) - 1;
    i = std::min(i, spec_.centerline.size() - 1);
    const double len = cumulative_[i + 1] - cumulative_[i];
    const double t = (s - cumulative_[i]) / len;
    return seg_start(i) + t * (seg_end(i) - seg_start(i));
}

double Track::heading_at(double progress_m) const {
    double s = std::fmod(progress_m, perimeter_);
    if (s < 0.0) s += perimeter_;
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), s);
    std::size_t i = static_cast<std::size_t>(std::distance(cumulative_.begin(), it)) - 1;
    i = std::min(i, spec_.centerline.size() - 1);
    const Vec2 d = seg_end(i) - seg_start(i);
    return std::atan2(d.y, d.x);
}

double Track::progress_delta(double from_m, double to_m) const {
    double d = to_m - from_m;
    if (d > 0.5 * perimeter_) d -= perimeter_;
    if (d <= -0.5 * perimeter_) d += perimeter_;
    return d;
}

void Track::build_index() {
    reach_ = 0.5 * spec_.lane_width_m + 0.1;
    const double half_diag = cell_ * std::numbers::sqrt2 / 2.0;
    double min_x = 1e300, max_x = -1e300, min_y = 1e300, max_y = -1e300;
    for (const auto& p : spec_.centerline) {
        min_x = std::min(min_x, p.x);
        max_x = std::max(max_x, p.x);
        min_y = std::min(min_y, p.y);
        max_y = std::max(max_y, p.y);
    }
    grid_origin_ = {min_x - reach_ - cell_, min_y - reach_ - cell_};
    grid_cols_ = static_cast<int>(std::ceil((max_x - min_x + 2 * (reach_ + cell_)) / cell_)) + 1;
    grid_rows_ = static_cast<int>(std::ceil((max_y - min_y + 2 * (reach_ + cell_)) / cell_)) + 1;
    const auto n_cells = static_cast<std::size_t>(grid_cols_) * static_cast<std::size_t>(grid_rows_);

    // Candidate i of a cell: lower bound = distance(center, segment) - half diagonal.
    // Any segment whose bound exceeds the reach can never be reported.
    std::vector<std::vector<std::pair<double, std::uint32_t>>> cells(n_cells);
    const double pad = reach_ + half_diag;
    for (std::size_t i = 0; i < spec_.centerline.size(); ++i) {
        const Vec2 a = seg_start(i);
        const Vec2 b = seg_end(i);
        const int c0 = static_cast<int>(std::floor((std::min(a.x, b.x) - pad - grid_origin_.x) / cell_));
        const int c1 = static_cast<int>(std::floor((std::max(a.x, b.x) + pad - grid_origin_.x) / cell_));
        const int r0 = static_cast<int>(std::floor((std::min(a.y, b.y) - pad - grid_origin_.y) / cell_));
        const int r1 = static_cast<int>(std::floor((std::max(a.y, b.y) + pad - grid_origin_.y) / cell_));
        for (int r = std::max(0, r0); r <= std::min(grid_rows_ - 1, r1); ++r) {
            for (int c = std::max(0, c0); c <= std::min(grid_cols_ - 1, c1); ++c) {
                const Vec2 center{grid_origin_.x + (c + 0.5) * cell_, grid_origin_.y + (r + 0.5) * cell_};
                const double bound = segment_distance(i, center) - half_diag - 1e-9;
                if (bound > reach_) continue;
                cells[static_cast<std::size_t>(r) * static_cast<std::size_t>(grid_cols_) + static_cast<std::size_t>(c)]
                    .emplace_back(bound, static_cast<std::uint32_t>(i));
            }
        }
    }
    cell_begin_.assign(n_cells + 1, 0);
    cand_segment_.clear();
    cand_bound_.clear();
    for (std::size_t k = 0; k < n_cells; ++k) {
        auto& list = cells[k];
        std::sort(list.begin(), list.end());
        for (const auto& [bound, seg] : list) {
            cand_bound_.push_back(bound);
            cand_segment_.push_back(seg);
        }
        cell_begin_[k + 1] = static_cast<std::uint32_t>(cand_segment_.size());
    }
}

double Track::near_distance(Vec2 p) const {
    const double fc = std::floor((p.x - grid_origin_.x) / cell_);
    const double fr = std::floor((p.y - grid_origin_.y) / cell_);
    if (!(fc >= 0.0 && fr >= 0.0 && fc < grid_cols_ && fr < grid_rows_)) return -1.0;
    const auto k = static_cast<std::size_t>(fr) * static_cast<std::size_t>(grid_cols_) + static_cast<std::size_t>(fc);
    double best2 = std::numeric_limits<double>::infinity();
    for (std::uint32_t j = cell_begin_[k]; j < cell_begin_[k + 1]; ++j) {
        const double lb = cand_bound_[j];
        if (lb > 0.0 && lb * lb > best2) break;
        const std::size_t i = cand_segment_[j];
        const Vec2 a = seg_start(i);
        const Vec2 d = seg_end(i) - a;
        const double t = std::clamp(dot(p - a, d) / dot(d, d), 0.0, 1.0);
        const Vec2 e = p - (a + t * d);
        best2 = std::min(best2, dot(e, e));
    }
    const double best = std::sqrt(best2);
    return best <= reach_ ? best : -1.0;
}

double lateral_offset(const Track& track, const VehicleState& state) {
    return track.project({state.x_m, state.y_m}).lateral_offset_m;
}

double track_progress(const Track& track, const VehicleState& state) {
    return track.project({state.x_m, state.y_m}).progress_m;
}

VehicleState start_state(const Track& track, double progress_m) {
    const Vec2 p = track.point_at(progress_m);
    VehicleState s;
    s.x_m = p.x;
    s.y_m = p.y;
    s.heading_rad = wrap_angle(track.heading_at(progress_m));
    return s;
}

}  // namespace pilotstack::sim
