#pragma once

#include <array>
#include <cstdint>
#include <ostream>
#include <vector>

#include "pilotstack/dataset/tub.hpp"

namespace pilotstack::dataset {

struct Split {
    std::vector<std::size_t> train;
    std::vector<std::size_t> val;
};

/// Seeded shuffle followed by a cut: floor(n * val_fraction) validation
/// indices (at least one when n >= 2), the rest for training.
Split split_indices(std::size_t count, double val_fraction, std::uint64_t seed);
Split split(const Tub& tub, double val_fraction, std::uint64_t seed);

struct Histogram {
    double lo = -1.0;
    double hi = 1.0;
    std::vector<std::size_t> counts;

    /// Bins holding at least one sample.
    std::size_t occupied_bins() const;
};

Histogram make_histogram(const std::vector<double>& values, std::size_t bins, double lo = -1.0, double hi = 1.0);

struct DatasetStats {
    std::size_t count = 0;
    Histogram steering;
    Histogram throttle;
    std::array<double, 3> pixel_mean{};
    std::array<double, 3> pixel_stddev{};
    double duration_s = 0.0;
    double steering_mean = 0.0;
    double throttle_mean = 0.0;
};

DatasetStats summarize(const Tub& tub, std::size_t bins = 20);

void print_stats(std::ostream& os, const DatasetStats& stats);
/// CSV with columns bin_lo, bin_hi, steering_count, throttle_count.
void write_histogram_csv(std::ostream& os, const DatasetStats& stats);

}  // namespace pilotstack::dataset
