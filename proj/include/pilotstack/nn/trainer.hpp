#pragma once

#include <cstdint>
#include <functional>
#include <ostream>
#include <vector>

#include "pilotstack/dataset/stats.hpp"
#include "pilotstack/dataset/tub.hpp"
#include "pilotstack/nn/network.hpp"

namespace pilotstack::nn {

enum class OptimizerKind { sgd, adam };

struct TrainerConfig {
    int epochs = 100;
    int batch_size = 64;
    double learning_rate = 1e-3;
    OptimizerKind optimizer = OptimizerKind::adam;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::uint64_t seed = 1;
    double val_fraction = 0.2;
    bool augment_flip = false;  // mirror image + negate steering with probability 1/2

    void validate() const;
};

struct EpochStats {
    int epoch = 0;
    double train_mse = 0.0;
    double val_mse = 0.0;
    double val_steering_mse = 0.0;
    double seconds = 0.0;
};

struct TrainingHistory {
    std::vector<EpochStats> epochs;

    /// Columns: epoch, train_mse, val_mse, seconds.
    void write_csv(std::ostream& os) const;
};

/// In-memory training data: 8-bit frames at the model's input size plus
/// (steering, throttle) targets.
class TrainingSet {
public:
    TrainingSet(std::size_t height, std::size_t width) : height_(height), width_(width) {}

    /// Loads every record, resizing frames whose size differs from the model input.
    static TrainingSet from_tub(const dataset::Tub& tub, const ModelSpec& spec);

    void add(const sim::ImageFrame& frame, double steering, double throttle);

    std::size_t size() const { return steering_.size(); }
    std::size_t height() const { return height_; }
    std::size_t width() const { return width_; }
    std::size_t frame_values() const { return height_ * width_ * 3; }
    const std::uint8_t* pixels(std::size_t i) const { return pixels_.data() + i * frame_values(); }
    double steering(std::size_t i) const { return steering_[i]; }
    double throttle(std::size_t i) const { return throttle_[i]; }

private:
    std::size_t height_;
    std::size_t width_;
    std::vector<std::uint8_t> pixels_;
    std::vector<double> steering_;
    std::vector<double> throttle_;
};

/// First-order optimizer over a ModelWeights parameter list.
template <typename T>
class Optimizer {
public:
    explicit Optimizer(const TrainerConfig& config) : config_(config) {}
    void step(ModelWeights<T>& weights, const std::vector<BasicTensor<T>>& grads);

private:
    TrainerConfig config_;
    long step_ = 0;
    std::vector<std::vector<double>> m_;
    std::vector<std::vector<double>> v_;
};

template <typename T>
struct TrainResult {
    ModelWeights<T> weights;
    TrainingHistory history;
};

/// Mean squared error over both outputs and the batch, with its gradient
/// with respect to the predictions.
template <typename T>
double mse_loss(const BasicTensor<T>& predictions, const BasicTensor<T>& targets, BasicTensor<T>* grad = nullptr);

using EpochCallback = std::function<void(const EpochStats&)>;

/// Minibatch training. Single-threaded with seeded initialization, shuffling
/// and dropout, so a fixed seed reproduces the weights bit for bit. Throws
/// NumericError naming the epoch if the loss diverges.
template <typename T>
TrainResult<T> train(const Network<T>& net, const TrainingSet& data, const dataset::Split& split,
                     const TrainerConfig& config, const EpochCallback& on_epoch = {});

/// Mean squared error of the eval-mode network on `indices`: {both outputs, steering only}.
template <typename T>
std::pair<double, double> evaluate(const Network<T>& net, const ModelWeights<T>& weights, const TrainingSet& data,
                                   const std::vector<std::size_t>& indices, std::size_t batch_size = 64);

}  // namespace pilotstack::nn
