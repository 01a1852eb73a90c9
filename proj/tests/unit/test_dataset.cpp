#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "chi_square.hpp"
#include "pilotstack/dataset/image_ops.hpp"
#include "pilotstack/dataset/stats.hpp"
#include "pilotstack/dataset/tub.hpp"
#include "pilotstack/errors.hpp"
#include "pilotstack/random.hpp"
#include "temp_dir.hpp"

using namespace pilotstack;
using namespace pilotstack::dataset;

namespace {

TubManifest small_manifest(int w = 8, int h = 6) {
    TubManifest m;
    m.image_width = w;
    m.image_height = h;
    m.created_utc = "2024-01-02T03:04:05Z";
    m.notes = "unit test";
    return m;
}

ImageFrame noise_frame(int w, int h, Rng& rng) {
    ImageFrame f(w, h);
    for (auto& p : f.pixels) p = static_cast<std::uint8_t>(uniform_index(rng, 256));
    return f;
}

DriveRecord make_record(Rng& rng, std::int64_t t) {
    DriveRecord r;
    r.steering_norm = uniform(rng, -1, 1);
    r.throttle_norm = uniform(rng, -1, 1);
    r.timestamp_ms = t;
    r.mode = uniform01(rng) < 0.5 ? DriveMode::manual_record : DriveMode::autopilot;
    r.speed_mps = uniform(rng, 0, 2);
    return r;
}

ImageFrame gray(const std::vector<std::vector<int>>& rows) {
    const int h = static_cast<int>(rows.size()), w = static_cast<int>(rows[0].size());
    ImageFrame f(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const auto v = static_cast<std::uint8_t>(rows[y][x]);
            f.set(x, y, {v, v, v});
        }
    return f;
}

}  // namespace

TEST_CASE("create then open gives an empty tub with the same manifest") {
    testutil::TempDir dir;
    const auto m = small_manifest();
    {
        Tub tub = Tub::create(dir / "t", m);
        CHECK(tub.empty());
        CHECK(tub.writable());
    }
    const Tub back = Tub::open(dir / "t");
    CHECK(back.size() == 0);
    CHECK(back.manifest() == m);
    CHECK(!back.writable());
    CHECK(manifest_from_json(manifest_to_json(m)) == m);
}

TEST_CASE("creating over an existing tub is refused") {
    testutil::TempDir dir;
    { Tub::create(dir / "t", small_manifest()); }
    CHECK_THROWS_AS(Tub::create(dir / "t", small_manifest()), ConfigError);
}

TEST_CASE("append round trips every field and pixel") {
    testutil::TempDir dir;
    Rng rng(21);
    std::vector<ImageFrame> frames;
    std::vector<DriveRecord> written;
    {
        Tub tub = Tub::create(dir / "t", small_manifest());
        for (int i = 0; i < 300; ++i) {
            frames.push_back(noise_frame(8, 6, rng));
            DriveRecord r = make_record(rng, i * 50);
            CHECK(tub.append(frames.back(), r) == i);
            written.push_back(tub.record(static_cast<std::size_t>(i)));
        }
    }
    const Tub tub = Tub::open(dir / "t");
    REQUIRE(tub.size() == 300);
    for (std::size_t i = 0; i < tub.size(); ++i) {
        CHECK(tub.record(i) == written[i]);
        CHECK(tub.record(i).index == static_cast<std::int64_t>(i));
        CHECK(tub.load_image(i) == frames[i]);
    }
    CHECK(tub.orphans().empty());
}

TEST_CASE("record json preserves doubles exactly") {
    DriveRecord r;
    r.index = 3;
    r.image_ref = "images/3.png";
    r.steering_norm = 0.1 + 0.2;
    r.throttle_norm = -1.0 / 3.0;
    r.timestamp_ms = 123456789;
    r.mode = DriveMode::autopilot;
    r.speed_mps = std::nextafter(0.65, 1.0);
    CHECK(record_from_json(record_to_json(r)) == r);
}

TEST_CASE("append rejects out-of-range controls and wrong frame size") {
    testutil::TempDir dir;
    Tub tub = Tub::create(dir / "t", small_manifest());
    Rng rng(1);
    DriveRecord r;
    r.steering_norm = 1.5;
    CHECK_THROWS_AS(tub.append(noise_frame(8, 6, rng), r), RangeError);
    r.steering_norm = 0.0;
    r.throttle_norm = -1.01;
    CHECK_THROWS_AS(tub.append(noise_frame(8, 6, rng), r), RangeError);
    r.throttle_norm = 0.0;
    CHECK_THROWS_AS(tub.append(noise_frame(9, 6, rng), r), ShapeError);
    CHECK(tub.empty());
    CHECK(tub.orphans().empty());
}

TEST_CASE("a second writer is locked out") {
    testutil::TempDir dir;
    Tub writer = Tub::create(dir / "t", small_manifest());
    CHECK_THROWS_AS(Tub::open_for_append(dir / "t"), ConfigError);
    CHECK_NOTHROW(Tub::open(dir / "t"));
}

TEST_CASE("reopening for append continues the index sequence") {
    testutil::TempDir dir;
    Rng rng(2);
    {
        Tub t = Tub::create(dir / "t", small_manifest());
        t.append(noise_frame(8, 6, rng), {});
    }
    {
        Tub t = Tub::open_for_append(dir / "t");
        CHECK(t.append(noise_frame(8, 6, rng), {}) == 1);
    }
    CHECK(Tub::open(dir / "t").size() == 2);
}

TEST_CASE("orphan images are detected and repaired") {
    testutil::TempDir dir;
    Rng rng(4);
    {
        Tub t = Tub::create(dir / "t", small_manifest());
        for (int i = 0; i < 3; ++i) t.append(noise_frame(8, 6, rng), {});
    }
    // An image written without its catalog line, as after a crash mid-append.
    write_png(noise_frame(8, 6, rng), dir.path() / "t" / "images" / "3.png");
    {
        const Tub ro = Tub::open(dir / "t");
        CHECK(ro.size() == 3);
        REQUIRE(ro.orphans().size() == 1);
    }
    Tub t = Tub::open_for_append(dir / "t");
    CHECK(t.repair() == 1);
    CHECK(t.orphans().empty());
    CHECK(t.append(noise_frame(8, 6, rng), {}) == 3);
}

TEST_CASE("a catalog line pointing at a missing image is corrupt") {
    testutil::TempDir dir;
    Rng rng(4);
    {
        Tub t = Tub::create(dir / "t", small_manifest());
        for (int i = 0; i < 2; ++i) t.append(noise_frame(8, 6, rng), {});
    }
    std::filesystem::remove(dir.path() / "t" / "images" / "1.png");
    CHECK_THROWS_AS(Tub::open(dir / "t"), CorruptDataError);
}

TEST_CASE("merging tubs re-indexes records") {
    testutil::TempDir dir;
    Rng rng(8);
    Tub a = Tub::create(dir / "a", small_manifest());
    Tub b = Tub::create(dir / "b", small_manifest());
    for (int i = 0; i < 3; ++i) a.append(noise_frame(8, 6, rng), make_record(rng, i));
    for (int i = 0; i < 2; ++i) b.append(noise_frame(8, 6, rng), make_record(rng, i));
    a.append_tub(b);
    REQUIRE(a.size() == 5);
    for (std::size_t i = 0; i < 5; ++i) CHECK(a.record(i).index == static_cast<std::int64_t>(i));
    CHECK(a.load_image(4) == b.load_image(1));
    CHECK(a.record(3).steering_norm == b.record(0).steering_norm);
}

TEST_CASE("resize to the same size is the identity") {
    Rng rng(9);
    const ImageFrame f = noise_frame(13, 7, rng);
    CHECK(resize_image(f, 13, 7) == f);
}

TEST_CASE("bilinear upsample of a 2x2 checkerboard") {
    const ImageFrame src = gray({{0, 255}, {255, 0}});
    const ImageFrame out = resize_image(src, 4, 4);
    // Half-pixel centers sample at -0.25, 0.25, 0.75, 1.25 (clamped to [0, 1]);
    // v = 255 * (fx (1 - fy) + fy (1 - fx)), rounded half up.
    const int expected[4][4] = {{0, 64, 191, 255}, {64, 96, 159, 191}, {191, 159, 96, 64}, {255, 191, 64, 0}};
    for (int y = 0; y < 4; ++y)
        for (int x = 0; x < 4; ++x) {
            CAPTURE(x);
            CAPTURE(y);
            CHECK(out.at(x, y).r == expected[y][x]);
            CHECK(out.at(x, y).g == expected[y][x]);
            CHECK(out.at(x, y).b == expected[y][x]);
        }
}

TEST_CASE("resize of a constant image is constant") {
    const ImageFrame f(5, 3, {12, 200, 77});
    for (const auto& [w, h] : std::vector<std::pair<int, int>>{{1, 1}, {17, 4}, {160, 120}, {3, 9}}) {
        CHECK(resize_image(f, w, h) == ImageFrame(w, h, {12, 200, 77}));
    }
}

TEST_CASE("resize commutes with horizontal flip") {
    Rng rng(10);
    for (int t = 0; t < 50; ++t) {
        const ImageFrame f = noise_frame(static_cast<int>(1 + uniform_index(rng, 40)), static_cast<int>(1 + uniform_index(rng, 30)), rng);
        const int w = static_cast<int>(1 + uniform_index(rng, 50)), h = static_cast<int>(1 + uniform_index(rng, 50));
        CHECK(flip_horizontal(resize_image(f, w, h)) == resize_image(flip_horizontal(f), w, h));
    }
}

TEST_CASE("resize rejects empty targets") {
    const ImageFrame f(4, 4);
    CHECK_THROWS_AS(resize_image(f, 0, 4), ShapeError);
    CHECK_THROWS_AS(resize_image(f, 4, 0), ShapeError);
}

TEST_CASE("png and jpeg codecs") {
    testutil::TempDir dir;
    Rng rng(12);
    const ImageFrame f = noise_frame(31, 17, rng);
    write_png(f, dir / "a.png");
    CHECK(read_png(dir / "a.png") == f);
    const ImageFrame smooth(40, 30, {100, 150, 200});
    const auto jpeg = encode_jpeg(smooth, 70);
    const ImageFrame back = decode_image(jpeg);
    CHECK(back.width_px == 40);
    CHECK(back.height_px == 30);
    CHECK(std::abs(back.at(20, 15).g - 150) <= 3);
}

TEST_CASE("split of 5000 at 0.2 is 4000 / 1000") {
    const Split s = split_indices(5000, 0.2, 42);
    CHECK(s.train.size() == 4000);
    CHECK(s.val.size() == 1000);
    std::set<std::size_t> all(s.train.begin(), s.train.end());
    for (auto i : s.val) CHECK(all.insert(i).second);
    CHECK(all.size() == 5000);
    CHECK(*all.rbegin() == 4999);
    const Split again = split_indices(5000, 0.2, 42);
    CHECK(again.train == s.train);
    CHECK(again.val == s.val);
    const Split other = split_indices(5000, 0.2, 43);
    CHECK(other.val != s.val);
}

TEST_CASE("split arithmetic and errors") {
    CHECK(split_indices(7, 0.3, 1).val.size() == 2);
    CHECK(split_indices(2, 0.1, 1).val.size() == 1);
    CHECK_THROWS_AS(split_indices(0, 0.2, 1), ConfigError);
    CHECK_THROWS_AS(split_indices(10, 1.0, 1), ConfigError);
    CHECK_THROWS_AS(split_indices(10, 0.0, 1), ConfigError);
}

TEST_CASE("summary of identical records") {
    testutil::TempDir dir;
    Tub tub = Tub::create(dir / "t", small_manifest());
    DriveRecord r;
    r.steering_norm = 0.25;
    r.throttle_norm = 0.5;
    for (int i = 0; i < 20; ++i) {
        r.timestamp_ms = i * 50;
        tub.append(ImageFrame(8, 6, {10, 20, 30}), r);
    }
    const DatasetStats s = summarize(tub, 10);
    CHECK(s.count == 20);
    CHECK(s.steering.occupied_bins() == 1);
    CHECK(s.throttle.occupied_bins() == 1);
    CHECK(s.pixel_mean[0] == doctest::Approx(10));
    CHECK(s.pixel_mean[2] == doctest::Approx(30));
    for (double sd : s.pixel_stddev) CHECK(sd == doctest::Approx(0.0));
    CHECK(s.duration_s == doctest::Approx(0.95));
    CHECK(s.steering_mean == doctest::Approx(0.25));
    std::ostringstream csv;
    write_histogram_csv(csv, s);
    CHECK(csv.str().rfind("bin_lo,bin_hi,steering_count,throttle_count", 0) == 0);
}

TEST_CASE("uniform steering gives a flat histogram") {
    testutil::TempDir dir;
    Tub tub = Tub::create(dir / "t", small_manifest(2, 2));
    Rng rng(13);
    const std::size_t n = 2000, bins = 20;
    for (std::size_t i = 0; i < n; ++i) {
        DriveRecord r;
        r.steering_norm = uniform(rng, -1.0, 1.0);
        tub.append(ImageFrame(2, 2), r);
    }
    const DatasetStats s = summarize(tub, bins);
    CHECK(s.count == n);
    const std::vector<double> expected(bins, static_cast<double>(n) / bins);
    // 19 degrees of freedom: the 0.1% critical value is 43.82.
    CHECK(oracle::chi_square(s.steering.counts, expected) < 43.82);
}

TEST_CASE("histogram edges and errors") {
    const Histogram h = make_histogram({-1.0, 1.0, 0.0, 2.0, -3.0}, 4);
    REQUIRE(h.counts.size() == 4);
    CHECK(h.counts[0] == 2);  // -1 and the clamped -3
    CHECK(h.counts[3] == 2);  // 1 and the clamped 2
    CHECK(h.counts[2] == 1);
    CHECK_THROWS_AS(make_histogram({0.0}, 0), ConfigError);
    testutil::TempDir dir;
    const Tub empty = Tub::create(dir / "t", small_manifest());
    CHECK_THROWS_AS(summarize(empty), ConfigError);
}
