#include "pilotstack/dataset/image_ops.hpp"

#include <fstream>
#include <iterator>
#include <string>

#include <opencv2/core.hpp>
#include <opencv2/imgcodecs.hpp>

#include "pilotstack/errors.hpp"

namespace pilotstack::dataset {

namespace {

// Integer sample position: floor index, fractional numerator over `den`.
struct Tap {
    int i0 = 0;
    int i1 = 0;
    std::int64_t frac = 0;
};

std::vector<Tap> make_taps(int in_size, int out_size, std::int64_t den) {
    std::vector<Tap> taps(static_cast<std::size_t>(out_size));
    for (int o = 0; o < out_size; ++o) {
        // Source coordinate (o + 0.5) * in / out - 0.5 == num / den.
        const std::int64_t num = (2 * std::int64_t{o} + 1) * in_size - out_size;
        Tap t;
        if (num > 0) {
            t.i0 = static_cast<int>(num / den);
            t.frac = num - std::int64_t{t.i0} * den;
        }
        if (t.i0 >= in_size - 1) {
            t.i0 = in_size - 1;
            t.frac = 0;
        }
        t.i1 = std::min(t.i0 + 1, in_size - 1);
        taps[static_cast<std::size_t>(o)] = t;
    }
    return taps;
}

cv::Mat to_bgr(const ImageFrame& frame) {
    cv::Mat bgr(frame.height_px, frame.width_px, CV_8UC3);
    for (int y = 0; y < frame.height_px; ++y) {
        auto* row = bgr.ptr<std::uint8_t>(y);
        for (int x = 0; x < frame.width_px; ++x) {
            const auto i = frame.index(x, y);
            row[3 * x] = frame.pixels[i + 2];
            row[3 * x + 1] = frame.pixels[i + 1];
            row[3 * x + 2] = frame.pixels[i];
        }
    }
    return bgr;
}

ImageFrame from_bgr(const cv::Mat& bgr) {
    ImageFrame frame(bgr.cols, bgr.rows);
    for (int y = 0; y < bgr.rows; ++y) {
        const auto* row = bgr.ptr<std::uint8_t>(y);
        for (int x = 0; x < bgr.cols; ++x) frame.set(x, y, {row[3 * x + 2], row[3 * x + 1], row[3 * x]});
    }
    return frame;
}

}  // namespace

ImageFrame resize_image(const ImageFrame& frame, int out_width, int out_height) {
    if (out_width < 1 || out_height < 1) throw ShapeError("resize target must be at least 1x1");
    if (!frame.valid()) throw ShapeError("resize source frame is malformed");

    const std::int64_t den_x = 2 * std::int64_t{out_width};
    const std::int64_t den_y = 2 * std::int64_t{out_height};
    const auto xs = make_taps(frame.width_px, out_width, den_x);
    const auto ys = make_taps(frame.height_px, out_height, den_y);
    const std::int64_t total = den_x * den_y;

    ImageFrame out(out_width, out_height);
    for (int y = 0; y < out_height; ++y) {
        const Tap& ty = ys[static_cast<std::size_t>(y)];
        for (int x = 0; x < out_width; ++x) {
            const Tap& tx = xs[static_cast<std::size_t>(x)];
            const auto i00 = frame.index(tx.i0, ty.i0);
            const auto i01 = frame.index(tx.i1, ty.i0);
            const auto i10 = frame.index(tx.i0, ty.i1);
            const auto i11 = frame.index(tx.i1, ty.i1);
            const auto o = out.index(x, y);
            for (int c = 0; c < 3; ++c) {
                const std::int64_t top = (den_x - tx.frac) * frame.pixels[i00 + c] + tx.frac * frame.pixels[i01 + c];
                const std::int64_t bot = (den_x - tx.frac) * frame.pixels[i10 + c] + tx.frac * frame.pixels[i11 + c];
                const std::int64_t v = (den_y - ty.frac) * top + ty.frac * bot;
                out.pixels[o + c] = static_cast<std::uint8_t>((v + total / 2) / total);
            }
        }
    }
    return out;
}

ImageFrame flip_horizontal(const ImageFrame& frame) {
    ImageFrame out(frame.width_px, frame.height_px);
    for (int y = 0; y < frame.height_px; ++y) {
        for (int x = 0; x < frame.width_px; ++x) out.set(frame.width_px - 1 - x, y, frame.at(x, y));
    }
    return out;
}

void write_png(const ImageFrame& frame, const std::filesystem::path& path) {
    std::vector<std::uint8_t> bytes;
    if (!cv::imencode(".png", to_bgr(frame), bytes, {cv::IMWRITE_PNG_COMPRESSION, 3})) {
        throw CorruptDataError("PNG encoding failed for " + path.string());
    }
    std::ofstream out(path, std::ios::binary);
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw CorruptDataError("cannot write image " + path.string());
}

ImageFrame read_png(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw CorruptDataError("cannot read image " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    try {
        return decode_image(bytes);
    } catch (const CorruptDataError&) {
        throw CorruptDataError("cannot decode image " + path.string());
    }
}

std::vector<std::uint8_t> encode_jpeg(const ImageFrame& frame, int quality) {
    std::vector<std::uint8_t> bytes;
    if (!cv::imencode(".jpg", to_bgr(frame), bytes, {cv::IMWRITE_JPEG_QUALITY, quality})) {
        throw CorruptDataError("JPEG encoding failed");
    }
    return bytes;
}

ImageFrame decode_image(const std::vector<std::uint8_t>& bytes) {
    if (bytes.empty()) throw CorruptDataError("empty image buffer");
    const cv::Mat bgr = cv::imdecode(bytes, cv::IMREAD_COLOR);
    if (bgr.empty()) throw CorruptDataError("image buffer could not be decoded");
    return from_bgr(bgr);
}

}  // namespace pilotstack::dataset
