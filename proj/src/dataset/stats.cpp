#include "pilotstack/dataset/stats.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>

#include "pilotstack/errors.hpp"
#include "pilotstack/random.hpp"

namespace pilotstack::dataset {

Split split_indices(std::size_t count, double val_fraction, std::uint64_t seed) {
    if (count == 0) throw ConfigError("cannot split an empty tub");
    if (!(val_fraction > 0.0 && val_fraction < 1.0)) throw ConfigError("val_fraction must lie in (0, 1)");

    std::vector<std::size_t> order(count);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(seed);
    shuffle(order, rng);

    auto n_val = static_cast<std::size_t>(std::floor(static_cast<double>(count) * val_fraction + 1e-9));
    if (count >= 2) n_val = std::clamp<std::size_t>(n_val, 1, count - 1);
    else n_val = 0;

    Split s;
    s.val.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
    s.train.assign(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
    return s;
}

Split split(const Tub& tub, double val_fraction, std::uint64_t seed) {
    return split_indices(tub.size(), val_fraction, seed);
}

std::size_t Histogram::occupied_bins() const {
    return static_cast<std::size_t>(std::count_if(counts.begin(), counts.end(), [](std::size_t c) { return c > 0; }));
}

Histogram make_histogram(const std::vector<double>& values, std::size_t bins, double lo, double hi) {
    if (bins == 0) throw ConfigError("histogram needs at least one bin");
    Histogram h{lo, hi, std::vector<std::size_t>(bins, 0)};
    const double width = (hi - lo) / static_cast<double>(bins);
    for (double v : values) {
        auto b = static_cast<std::ptrdiff_t>(std::floor((v - lo) / width));
        b = std::clamp<std::ptrdiff_t>(b, 0, static_cast<std::ptrdiff_t>(bins) - 1);
        ++h.counts[static_cast<std::size_t>(b)];
    }
    return h;
}

DatasetStats summarize(const Tub& tub, std::size_t bins) {
    if (tub.empty()) throw ConfigError("cannot summarize an empty tub: " + tub.root().string());

    DatasetStats st;
    st.count = tub.size();
    std::vector<double> steering, throttle;
    steering.reserve(tub.size());
    throttle.reserve(tub.size());
    for (const auto& r : tub.records()) {
        steering.push_back(r.steering_norm);
        throttle.push_back(r.throttle_norm);
    }
    st.steering = make_histogram(steering, bins);
    st.throttle = make_histogram(throttle, bins);
    st.steering_mean = std::accumulate(steering.begin(), steering.end(), 0.0) / static_cast<double>(st.count);
    st.throttle_mean = std::accumulate(throttle.begin(), throttle.end(), 0.0) / static_cast<double>(st.count);

    // Integer sums keep the per-channel moments exact.
    std::array<std::uint64_t, 3> sum{}, sum_sq{};
    std::uint64_t n = 0;
    for (std::size_t i = 0; i < tub.size(); ++i) {
        const auto frame = tub.load_image(i);
        for (std::size_t p = 0; p < frame.pixels.size(); p += 3) {
            for (std::size_t c = 0; c < 3; ++c) {
                const std::uint64_t v = frame.pixels[p + c];
                sum[c] += v;
                sum_sq[c] += v * v;
            }
        }
        n += frame.pixels.size() / 3;
    }
    for (std::size_t c = 0; c < 3; ++c) {
        const double mean = static_cast<double>(sum[c]) / static_cast<double>(n);
        const double var = static_cast<double>(sum_sq[c]) / static_cast<double>(n) - mean * mean;
        st.pixel_mean[c] = mean;
        st.pixel_stddev[c] = std::sqrt(std::max(0.0, var));
    }
    const auto& recs = tub.records();
    st.duration_s = static_cast<double>(recs.back().timestamp_ms - recs.front().timestamp_ms) / 1000.0;
    return st;
}

void print_stats(std::ostream& os, const DatasetStats& st) {
    os << "records: " << st.count << '\n'
       << "duration_s: " << std::fixed << std::setprecision(2) << st.duration_s << '\n'
       << std::setprecision(4) << "steering_mean: " << st.steering_mean << '\n'
       << "throttle_mean: " << st.throttle_mean << '\n'
       << std::setprecision(2) << "pixel_mean_rgb: " << st.pixel_mean[0] << ' ' << st.pixel_mean[1] << ' '
       << st.pixel_mean[2] << '\n'
       << "pixel_stddev_rgb: " << st.pixel_stddev[0] << ' ' << st.pixel_stddev[1] << ' ' << st.pixel_stddev[2]
       << '\n';
    os.unsetf(std::ios::floatfield);
    os << "steering histogram (" << st.steering.counts.size() << " bins):";
    for (auto c : st.steering.counts) os << ' ' << c;
    os << "\nthrottle histogram (" << st.throttle.counts.size() << " bins):";
    for (auto c : st.throttle.counts) os << ' ' << c;
    os << '\n';
}

void write_histogram_csv(std::ostream& os, const DatasetStats& st) {
    os << "bin_lo,bin_hi,steering_count,throttle_count\n";
    const std::size_t bins = st.steering.counts.size();
    const double width = (st.steering.hi - st.steering.lo) / static_cast<double>(bins);
    for (std::size_t b = 0; b < bins; ++b) {
        os << st.steering.lo + width * static_cast<double>(b) << ',' << st.steering.lo + width * static_cast<double>(b + 1)
           << ',' << st.steering.counts[b] << ',' << st.throttle.counts[b] << '\n';
    }
}

}  // namespace pilotstack::dataset
