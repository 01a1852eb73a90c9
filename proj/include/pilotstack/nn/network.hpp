#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pilotstack/nn/layers.hpp"
#include "pilotstack/nn/model_spec.hpp"
#include "pilotstack/nn/tensor.hpp"
#include "pilotstack/random.hpp"
#include "pilotstack/sim/image.hpp"

namespace pilotstack::nn {

/// Trainable parameters in layer order. Conv layers contribute
/// `layer{i}.kernel` and `layer{i}.bias`; dense layers `layer{i}.weight` and
/// `layer{i}.bias`.
template <typename T>
struct ModelWeights {
    std::uint64_t fingerprint = 0;
    std::vector<std::string> names;
    std::vector<BasicTensor<T>> tensors;

    const BasicTensor<T>& get(std::string_view name) const;
    BasicTensor<T>& get(std::string_view name);
    std::size_t parameter_count() const;

    friend bool operator==(const ModelWeights&, const ModelWeights&) = default;
};

/// Stateless evaluator for a ModelSpec. Weights are passed in, so one
/// Network can serve concurrent inference over immutable weights.
template <typename T>
class Network {
public:
    /// Per-layer values kept by a forward pass for the backward pass.
    struct Trace {
        BasicTensor<T> input;
        std::vector<BasicTensor<T>> outputs;  // post-activation output of each layer
        std::vector<BasicTensor<T>> masks;    // dropout masks (empty for other layers)
    };

    explicit Network(ModelSpec spec);

    const ModelSpec& spec() const { return spec_; }
    std::uint64_t fingerprint() const { return fingerprint_; }
    /// Per-sample output shape of every layer.
    const std::vector<Shape>& layer_shapes() const { return shapes_; }

    /// He-uniform kernels (limit sqrt(6 / fan_in)) and zero biases.
    ModelWeights<T> initialize(std::uint64_t seed) const;
    ModelWeights<T> zeros() const;
    /// Throws FingerprintMismatch or ShapeError.
    void check_weights(const ModelWeights<T>& weights) const;

    /// `batch` is [n, h, w, c]; returns [n, 2]. Train mode needs `rng`;
    /// `trace` is filled when given. Throws NumericError naming the first
    /// layer that produced a non-finite value.
    BasicTensor<T> forward(const ModelWeights<T>& weights, const BasicTensor<T>& batch, DropoutMode mode,
                           Rng* rng = nullptr, Trace* trace = nullptr) const;

    /// Parameter gradients, aligned with `weights.tensors`.
    std::vector<BasicTensor<T>> backward(const ModelWeights<T>& weights, const Trace& trace,
                                         const BasicTensor<T>& grad_output,
                                         BasicTensor<T>* grad_input = nullptr) const;

    BasicTensor<T> predict(const ModelWeights<T>& weights, const BasicTensor<T>& batch) const {
        return forward(weights, batch, DropoutMode::eval);
    }

private:
    ModelSpec spec_;
    std::vector<Shape> shapes_;
    std::vector<std::optional<std::size_t>> first_param_;  // index into weights.tensors per layer
    std::size_t param_tensors_ = 0;
    std::uint64_t fingerprint_ = 0;
};

/// Writes a frame into `dst` as HWC values scaled to [0, 1].
template <typename T>
void frame_to_input(const sim::ImageFrame& frame, T* dst);

struct Controls {
    double steering = 0.0;
    double throttle = 0.0;
};

/// Single-image inference. The frame must match the model's input size.
/// Outputs are raw network values; clamping happens at the drive boundary.
Controls infer_controls(const Network<float>& net, const ModelWeights<float>& weights, const sim::ImageFrame& frame);

extern template struct ModelWeights<float>;
extern template struct ModelWeights<double>;
extern template class Network<float>;
extern template class Network<double>;

}  // namespace pilotstack::nn
