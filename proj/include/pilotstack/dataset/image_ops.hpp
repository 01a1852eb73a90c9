#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pilotstack/sim/image.hpp"

namespace pilotstack::dataset {

using sim::ImageFrame;

/// Bilinear resize with half-pixel-centered sampling and edge clamping.
///
/// Sample positions and weights are computed in exact integer arithmetic and
/// the result is rounded half-up, so the output is bit-reproducible and
/// commutes exactly with horizontal flips.
ImageFrame resize_image(const ImageFrame& frame, int out_width, int out_height);

ImageFrame flip_horizontal(const ImageFrame& frame);

void write_png(const ImageFrame& frame, const std::filesystem::path& path);
ImageFrame read_png(const std::filesystem::path& path);

std::vector<std::uint8_t> encode_jpeg(const ImageFrame& frame, int quality);
ImageFrame decode_image(const std::vector<std::uint8_t>& bytes);

}  // namespace pilotstack::dataset
