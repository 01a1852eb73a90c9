#include "pilotstack/sim/camera.hpp"

#include <cmath>
#include <numbers>

#include "pilotstack/errors.hpp"

namespace pilotstack::sim {

void CameraModel::validate() const {
    if (!(height_m > 0.0)) throw ConfigError("camera.height_m must be positive");
    if (!(horizontal_fov_rad > 0.0 && horizontal_fov_rad < std::numbers::pi)) {
        throw ConfigError("camera.horizontal_fov_rad must lie in (0, pi)");
    }
    if (!(std::abs(pitch_rad) < std::numbers::pi / 2)) throw ConfigError("camera.pitch_rad must lie in (-pi/2, pi/2)");
    if (image_width_px < 1 || image_height_px < 1) throw ConfigError("camera image size must be at least 1x1");
}

ImageFrame render_camera(const Track& track, const VehicleState& state, const CameraModel& cam,
                         const RenderStyle& style) {
    const int w = cam.image_width_px;
    const int h = cam.image_height_px;
    ImageFrame frame(w, h, style.sky);

    const double focal = 0.5 * w / std::tan(0.5 * cam.horizontal_fov_rad);
    const double cp = std::cos(cam.pitch_rad);
    const double sp = std::sin(cam.pitch_rad);
    const double ch = std::cos(state.heading_rad);
    const double sh = std::sin(state.heading_rad);
    const Vec2 origin{state.x_m + cam.forward_offset_m * ch, state.y_m + cam.forward_offset_m * sh};

    const double half_lane = 0.5 * track.lane_width();
    const double line_inner = half_lane - style.boundary_width_m;

    for (int v = 0; v < h; ++v) {
        const double vc = v + 0.5 - 0.5 * h;  // image y, down
        const double fwd = focal * cp - vc * sp;
        const double up = -vc * cp - focal * sp;
        if (up >= 0.0) continue;  // at or above the horizon
        const double t = cam.height_m / -up;
        const double ahead = t * fwd;
        for (int u = 0; u < w; ++u) {
            const double uc = u + 0.5 - 0.5 * w;  // image x, right
            const double left = -t * uc;
            const Vec2 p{origin.x + ahead * ch - left * sh, origin.y + ahead * sh + left * ch};
            const double d = fwd > 0.0 ? track.near_distance(p) : -1.0;
            Rgb color = style.ground;
            if (d >= 0.0 && d <= half_lane) color = d >= line_inner ? style.boundary : style.lane;
            frame.set(u, v, color);
        }
    }
    return frame;
}

}  // namespace pilotstack::sim
