#include "pilotstack/nn/trainer.hpp"

#include <chrono>
#include <cmath>
#include <string>

#include "pilotstack/dataset/image_ops.hpp"
#include "pilotstack/errors.hpp"

namespace pilotstack::nn {

void TrainerConfig::validate() const {
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("adam betas must lie in [0, 1)");
    if (!(epsilon > 0.0)) throw ConfigError("adam epsilon must be positive");
    if (!(val_fraction > 0.0 && val_fraction < 1.0)) throw ConfigError("val_fraction must lie in (0, 1)");
}

void TrainingHistory::write_csv(std::ostream& os) const {
    os << "epoch,train_mse,val_mse,seconds\n";
    for (const auto& e : epochs) {
        os << e.epoch << ',' << e.train_mse << ',' << e.val_mse << ',' << e.seconds << '\n';
    }
}

TrainingSet TrainingSet::from_tub(const dataset::Tub& tub, const ModelSpec& spec) {
    if (spec.input_channels != 3) throw ConfigError("tub images are RGB; the model must take 3 channels");
    TrainingSet set(spec.input_height, spec.input_width);
    for (std::size_t i = 0; i < tub.size(); ++i) {
        const auto& r = tub.record(i);
        set.add(tub.load_image(i), r.steering_norm, r.throttle_norm);
    }
    return set;
}

void TrainingSet::add(const sim::ImageFrame& frame, double steering, double throttle) {
    const sim::ImageFrame* src = &frame;
    sim::ImageFrame resized;
    if (static_cast<std::size_t>(frame.width_px) != width_ || static_cast<std::size_t>(frame.height_px) != height_) {
        resized = dataset::resize_image(frame, static_cast<int>(width_), static_cast<int>(height_));
        src = &resized;
    }
    pixels_.insert(pixels_.end(), src->pixels.begin(), src->pixels.end());
    steering_.push_back(steering);
    throttle_.push_back(throttle);
}

template <typename T>
void Optimizer<T>::step(ModelWeights<T>& weights, const std::vector<BasicTensor<T>>& grads) {
    if (grads.size() != weights.tensors.size()) throw ShapeError("gradient count does not match weights");
    ++step_;
    const double lr = config_.learning_rate;
    if (config_.optimizer == OptimizerKind::sgd) {
        for (std::size_t t = 0; t < grads.size(); ++t) {
            auto& w = weights.tensors[t];
            for (std::size_t i = 0; i < w.size(); ++i) w[i] = static_cast<T>(w[i] - lr * grads[t][i]);
        }
        return;
    }
    if (m_.empty()) {
        for (const auto& w : weights.tensors) {
            m_.emplace_back(w.size(), 0.0);
            v_.emplace_back(w.size(), 0.0);
        }
    }
    const double b1 = config_.beta1;
    const double b2 = config_.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(step_));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(step_));
    for (std::size_t t = 0; t < grads.size(); ++t) {
        auto& w = weights.tensors[t];
        auto& m = m_[t];
        auto& v = v_[t];
        for (std::size_t i = 0; i < w.size(); ++i) {
            const double g = grads[t][i];
            m[i] = b1 * m[i] + (1.0 - b1) * g;
            v[i] = b2 * v[i] + (1.0 - b2) * g * g;
            const double mhat = m[i] / c1;
            const double vhat = v[i] / c2;
            w[i] = static_cast<T>(w[i] - lr * mhat / (std::sqrt(vhat) + config_.epsilon));
        }
    }
}

template <typename T>
double mse_loss(const BasicTensor<T>& predictions, const BasicTensor<T>& targets, BasicTensor<T>* grad) {
    if (predictions.shape() != targets.shape()) throw ShapeError("loss: prediction and target shapes differ");
    const double n = static_cast<double>(predictions.size());
    double sum = 0.0;
    if (grad) *grad = BasicTensor<T>(predictions.shape());
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const double d = static_cast<double>(predictions[i]) - static_cast<double>(targets[i]);
        sum += d * d;
        if (grad) (*grad)[i] = static_cast<T>(2.0 * d / n);
    }
    return sum / n;
}

namespace {

template <typename T>
void fill_batch(const TrainingSet& data, const std::vector<std::size_t>& indices, std::size_t begin, std::size_t end,
                const std::vector<bool>* flips, BasicTensor<T>& input, BasicTensor<T>& target) {
    const std::size_t n = end - begin;
    const std::size_t h = data.height();
    const std::size_t w = data.width();
    input = BasicTensor<T>(Shape{n, h, w, 3});
    target = BasicTensor<T>(Shape{n, kModelOutputs});
    constexpr T scale = T{1} / T{255};
    for (std::size_t b = 0; b < n; ++b) {
        const std::size_t idx = indices[begin + b];
        const std::uint8_t* src = data.pixels(idx);
        T* dst = input.data() + b * data.frame_values();
        const bool flip = flips && (*flips)[begin + b];
        if (!flip) {
            for (std::size_t i = 0; i < data.frame_values(); ++i) dst[i] = static_cast<T>(src[i]) * scale;
        } else {
            for (std::size_t y = 0; y < h; ++y) {
                for (std::size_t x = 0; x < w; ++x) {
                    const std::size_t s = (y * w + (w - 1 - x)) * 3;
                    const std::size_t d = (y * w + x) * 3;
                    for (std::size_t c = 0; c < 3; ++c) dst[d + c] = static_cast<T>(src[s + c]) * scale;
                }
            }
        }
        target[b * 2] = static_cast<T>(flip ? -data.steering(idx) : data.steering(idx));
        target[b * 2 + 1] = static_cast<T>(data.throttle(idx));
    }
}

}  // namespace

template <typename T>
std::pair<double, double> evaluate(const Network<T>& net, const ModelWeights<T>& weights, const TrainingSet& data,
                                   const std::vector<std::size_t>& indices, std::size_t batch_size) {
    if (indices.empty()) return {std::nan(""), std::nan("")};
    double total = 0.0;
    double steering = 0.0;
    BasicTensor<T> input, target;
    for (std::size_t begin = 0; begin < indices.size(); begin += batch_size) {
        const std::size_t end = std::min(indices.size(), begin + batch_size);
        fill_batch(data, indices, begin, end, nullptr, input, target);
        const BasicTensor<T> pred = net.predict(weights, input);
        for (std::size_t b = 0; b < end - begin; ++b) {
            const double ds = static_cast<double>(pred[2 * b]) - static_cast<double>(target[2 * b]);
            const double dt = static_cast<double>(pred[2 * b + 1]) - static_cast<double>(target[2 * b + 1]);
            total += ds * ds + dt * dt;
            steering += ds * ds;
        }
    }
    const double n = static_cast<double>(indices.size());
    return {total / (2.0 * n), steering / n};
}

template <typename T>
TrainResult<T> train(const Network<T>& net, const TrainingSet& data, const dataset::Split& split,
                     const TrainerConfig& config, const EpochCallback& on_epoch) {
    config.validate();
    if (split.train.empty()) throw ConfigError("training split is empty");
    if (data.height() != net.spec().input_height || data.width() != net.spec().input_width) {
        throw ShapeError("training frames do not match the model input size");
    }

    TrainResult<T> result{net.initialize(config.seed), {}};
    Optimizer<T> optimizer(config);
    Rng order_rng(config.seed + 0x5851F42D4C957F2DULL);
    Rng dropout_rng(config.seed + 0x14057B7EF767814FULL);

    std::vector<std::size_t> order = split.train;
    std::vector<bool> flips(order.size(), false);
    const auto batch = static_cast<std::size_t>(config.batch_size);
    BasicTensor<T> input, target, grad;
    typename Network<T>::Trace trace;

    for (int epoch = 1; epoch <= config.epochs; ++epoch) {
        const auto t0 = std::chrono::steady_clock::now();
        shuffle(order, order_rng);
        if (config.augment_flip) {
            for (std::size_t i = 0; i < flips.size(); ++i) flips[i] = uniform01(order_rng) < 0.5;
        }

        double loss_sum = 0.0;
        for (std::size_t begin = 0; begin < order.size(); begin += batch) {
            const std::size_t end = std::min(order.size(), begin + batch);
            fill_batch(data, order, begin, end, config.augment_flip ? &flips : nullptr, input, target);
            BasicTensor<T> pred;
            try {
                pred = net.forward(result.weights, input, DropoutMode::train, &dropout_rng, &trace);
            } catch (const NumericError& e) {
                throw NumericError("training diverged at epoch " + std::to_string(epoch) + ": " + e.what());
            }
            const double loss = mse_loss(pred, target, &grad);
            if (!std::isfinite(loss)) throw NumericError("training diverged at epoch " + std::to_string(epoch));
            loss_sum += loss * static_cast<double>(end - begin);
            optimizer.step(result.weights, net.backward(result.weights, trace, grad));
        }

        EpochStats stats;
        stats.epoch = epoch;
        stats.train_mse = loss_sum / static_cast<double>(order.size());
        std::tie(stats.val_mse, stats.val_steering_mse) = evaluate(net, result.weights, data, split.val, batch);
        stats.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        result.history.epochs.push_back(stats);
        if (on_epoch) on_epoch(stats);
    }
    return result;
}

template class Optimizer<float>;
template class Optimizer<double>;
template double mse_loss(const BasicTensor<float>&, const BasicTensor<float>&, BasicTensor<float>*);
template double mse_loss(const BasicTensor<double>&, const BasicTensor<double>&, BasicTensor<double>*);
template TrainResult<float> train(const Network<float>&, const TrainingSet&, const dataset::Split&,
                                  const TrainerConfig&, const EpochCallback&);
template TrainResult<double> train(const Network<double>&, const TrainingSet&, const dataset::Split&,
                                   const TrainerConfig&, const EpochCallback&);
template std::pair<double, double> evaluate(const Network<float>&, const ModelWeights<float>&, const TrainingSet&,
                                            const std::vector<std::size_t>&, std::size_t);
template std::pair<double, double> evaluate(const Network<double>&, const ModelWeights<double>&, const TrainingSet&,
                                            const std::vector<std::size_t>&, std::size_t);

}  // namespace pilotstack::nn
