#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace pilotstack::sim {

struct Rgb {
    std::uint8_t r = 0;
    std::uint8_t g = 0;
    std::uint8_t b = 0;
    friend bool operator==(const Rgb&, const Rgb&) = default;
};

// Row-major RGB, 8 bits per channel.
struct ImageFrame {
    int width_px = 0;
    int height_px = 0;
    std::vector<std::uint8_t> pixels;

    ImageFrame() = default;
    ImageFrame(int width, int height, Rgb fill = {})
        : width_px(width), height_px(height),
          pixels(static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * 3) {
        for (std::size_t i = 0; i < pixels.size(); i += 3) {
            pixels[i] = fill.r;
            pixels[i + 1] = fill.g;
            pixels[i + 2] = fill.b;
        }
    }

    std::size_t index(int x, int y) const {
        return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_px) + static_cast<std::size_t>(x)) * 3;
    }
    Rgb at(int x, int y) const {
        const auto i = index(x, y);
        return {pixels[i], pixels[i + 1], pixels[i + 2]};
    }
    void set(int x, int y, Rgb c) {
        const auto i = index(x, y);
        pixels[i] = c.r;
        pixels[i + 1] = c.g;
        pixels[i + 2] = c.b;
    }
    bool valid() const {
        return width_px > 0 && height_px > 0 &&
               pixels.size() == static_cast<std::size_t>(width_px) * static_cast<std::size_t>(height_px) * 3;
    }

    friend bool operator==(const ImageFrame&, const ImageFrame&) = default;
};

}  // namespace pilotstack::sim
