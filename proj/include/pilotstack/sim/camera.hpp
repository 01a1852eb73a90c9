#pragma once

#include "pilotstack/sim/image.hpp"
#include "pilotstack/sim/track.hpp"
#include "pilotstack/sim/vehicle.hpp"

namespace pilotstack::sim {

/// Forward-looking pinhole camera rigidly mounted on the car.
struct CameraModel {
    double height_m = 0.12;
    double pitch_rad = 0.35;  // downward positive
    double horizontal_fov_rad = 1.2;
    double forward_offset_m = 0.15;  // ahead of the rear axle
    int image_width_px = 160;
    int image_height_px = 120;

    void validate() const;
};

struct RenderStyle {
    Rgb sky{150, 190, 230};
    Rgb ground{70, 120, 60};
    Rgb lane{55, 55, 60};
    Rgb boundary{240, 240, 240};
    double boundary_width_m = 0.05;
};

/// Ray-casts the ground plane for every pixel. Pure function of its inputs:
/// identical arguments produce bit-identical frames.
ImageFrame render_camera(const Track& track, const VehicleState& state, const CameraModel& cam,
                         const RenderStyle& style = {});

}  // namespace pilotstack::sim
