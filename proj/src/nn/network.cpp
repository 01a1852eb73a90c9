#include "pilotstack/nn/network.hpp"

#include <cmath>
#include <utility>

#include "pilotstack/errors.hpp"

namespace pilotstack::nn {

template <typename T>
const BasicTensor<T>& ModelWeights<T>::get(std::string_view name) const {
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (names[i] == name) return tensors[i];
    }
    throw ShapeError("no weight tensor named " + std::string(name));
}

template <typename T>
BasicTensor<T>& ModelWeights<T>::get(std::string_view name) {
    return const_cast<BasicTensor<T>&>(std::as_const(*this).get(name));
}

template <typename T>
std::size_t ModelWeights<T>::parameter_count() const {
    std::size_t n = 0;
    for (const auto& t : tensors) n += t.size();
    return n;
}

template <typename T>
Network<T>::Network(ModelSpec spec) : spec_(std::move(spec)) {
    validate_model_spec(spec_);
    shapes_ = infer_shapes(spec_);
    fingerprint_ = spec_fingerprint(spec_);
    std::size_t next = 0;
    for (const auto& layer : spec_.layers) {
        if (std::holds_alternative<Conv2DSpec>(layer) || std::holds_alternative<DenseSpec>(layer)) {
            first_param_.push_back(next);
            next += 2;
        } else {
            first_param_.push_back(std::nullopt);
        }
    }
    param_tensors_ = next;
}

template <typename T>
ModelWeights<T> Network<T>::zeros() const {
    ModelWeights<T> w;
    w.fingerprint = fingerprint_;
    Shape in{spec_.input_height, spec_.input_width, spec_.input_channels};
    for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
        const std::string prefix = "layer" + std::to_string(i) + ".";
        if (const auto* c = std::get_if<Conv2DSpec>(&spec_.layers[i])) {
            w.names.push_back(prefix + "kernel");
            w.tensors.emplace_back(Shape{c->kernel, c->kernel, in[2], c->filters});
            w.names.push_back(prefix + "bias");
            w.tensors.emplace_back(Shape{c->filters});
        } else if (const auto* d = std::get_if<DenseSpec>(&spec_.layers[i])) {
            w.names.push_back(prefix + "weight");
            w.tensors.emplace_back(Shape{in[0], d->units});
            w.names.push_back(prefix + "bias");
            w.tensors.emplace_back(Shape{d->units});
        }
        in = shapes_[i];
    }
    return w;
}

template <typename T>
ModelWeights<T> Network<T>::initialize(std::uint64_t seed) const {
    ModelWeights<T> w = zeros();
    Rng rng(seed);
    for (std::size_t i = 0; i < w.tensors.size(); i += 2) {
        auto& kernel = w.tensors[i];
        // Fan-in is everything but the last (output) dimension.
        const std::size_t fan_in = kernel.size() / kernel.shape().back();
        const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
        for (auto& v : kernel.values()) v = static_cast<T>(uniform(rng, -limit, limit));
    }
    return w;
}

template <typename T>
void Network<T>::check_weights(const ModelWeights<T>& weights) const {
    if (weights.fingerprint != fingerprint_) {
        throw FingerprintMismatch("weights were trained for a different model spec");
    }
    const ModelWeights<T> ref = zeros();
    if (weights.tensors.size() != ref.tensors.size()) throw ShapeError("weight tensor count does not match the spec");
    for (std::size_t i = 0; i < ref.tensors.size(); ++i) {
        if (weights.names[i] != ref.names[i] || weights.tensors[i].shape() != ref.tensors[i].shape()) {
            throw ShapeError("weight tensor " + ref.names[i] + " expected shape " +
                             shape_string(ref.tensors[i].shape()));
        }
    }
}

template <typename T>
BasicTensor<T> Network<T>::forward(const ModelWeights<T>& weights, const BasicTensor<T>& batch, DropoutMode mode,
                                   Rng* rng, Trace* trace) const {
    const Shape expected{spec_.input_height, spec_.input_width, spec_.input_channels};
    if (batch.rank() != 4 || Shape(batch.shape().begin() + 1, batch.shape().end()) != expected) {
        throw ShapeError("network input " + shape_string(batch.shape()) + " does not match [n, " +
                         std::to_string(expected[0]) + ", " + std::to_string(expected[1]) + ", " +
                         std::to_string(expected[2]) + "]");
    }
    if (mode == DropoutMode::train && rng == nullptr) throw DomainError("train-mode forward needs an rng");
    if (weights.tensors.size() != param_tensors_) {
        throw ShapeError("weight tensor count does not match the spec");
    }
    const std::size_t n = batch.dim(0);

    if (trace) {
        trace->input = batch;
        trace->outputs.assign(spec_.layers.size(), {});
        trace->masks.assign(spec_.layers.size(), {});
    }

    BasicTensor<T> x = batch;
    for (std::size_t i = 0; i < spec_.layers.size(); ++i) {
        const auto& layer = spec_.layers[i];
        if (const auto* c = std::get_if<Conv2DSpec>(&layer)) {
            const std::size_t p = *first_param_[i];
            x = conv2d_forward(x, weights.tensors[p], weights.tensors[p + 1], c->stride);
            if (c->activation == Activation::relu) x = relu_forward(x);
        } else if (std::holds_alternative<FlattenSpec>(layer)) {
            x = x.reshaped({n, x.size() / n});
        } else if (const auto* d = std::get_if<DenseSpec>(&layer)) {
            const std::size_t p = *first_param_[i];
            x = dense_forward(x, weights.tensors[p], weights.tensors[p + 1]);
            if (d->activation == Activation::relu) x = relu_forward(x);
        } else if (const auto* dr = std::get_if<DropoutSpec>(&layer)) {
            Rng unused(0);
            auto r = dropout(x, dr->rate, mode, rng ? *rng : unused);
            x = std::move(r.output);
            if (trace) trace->masks[i] = std::move(r.mask);
        }
        if (!x.all_finite()) throw NumericError("non-finite activation at layer " + std::to_string(i));
        if (trace) trace->outputs[i] = x;
    }
    return x;
}

template <typename T>
std::vector<BasicTensor<T>> Network<T>::backward(const ModelWeights<T>& weights, const Trace& trace,
                                                 const BasicTensor<T>& grad_output, BasicTensor<T>* grad_input) const {
    std::vector<BasicTensor<T>> grads(weights.tensors.size());
    BasicTensor<T> g = grad_output;
    for (std::size_t i = spec_.layers.size(); i-- > 0;) {
        const auto& layer = spec_.layers[i];
        const BasicTensor<T>& input = i == 0 ? trace.input : trace.outputs[i - 1];
        const bool need_input = i > 0 || grad_input != nullptr;
        if (const auto* c = std::get_if<Conv2DSpec>(&layer)) {
            if (c->activation == Activation::relu) g = relu_backward(trace.outputs[i], g);
            const std::size_t p = *first_param_[i];
            auto cg = conv2d_backward(input, weights.tensors[p], g, c->stride, need_input);
            grads[p] = std::move(cg.kernel);
            grads[p + 1] = std::move(cg.bias);
            g = std::move(cg.input);
        } else if (std::holds_alternative<FlattenSpec>(layer)) {
            g = g.reshaped(input.shape());
        } else if (const auto* d = std::get_if<DenseSpec>(&layer)) {
            if (d->activation == Activation::relu) g = relu_backward(trace.outputs[i], g);
            const std::size_t p = *first_param_[i];
            auto dg = dense_backward(input, weights.tensors[p], g, need_input);
            grads[p] = std::move(dg.weight);
            grads[p + 1] = std::move(dg.bias);
            g = std::move(dg.input);
        } else if (std::holds_alternative<DropoutSpec>(layer)) {
            g = dropout_backward(g, trace.masks[i]);
        }
    }
    if (grad_input) *grad_input = std::move(g);
    return grads;
}

template <typename T>
void frame_to_input(const sim::ImageFrame& frame, T* dst) {
    constexpr T scale = T{1} / T{255};
    for (std::size_t i = 0; i < frame.pixels.size(); ++i) dst[i] = static_cast<T>(frame.pixels[i]) * scale;
}

template void frame_to_input<float>(const sim::ImageFrame&, float*);
template void frame_to_input<double>(const sim::ImageFrame&, double*);

Controls infer_controls(const Network<float>& net, const ModelWeights<float>& weights, const sim::ImageFrame& frame) {
    const auto& spec = net.spec();
    if (static_cast<std::size_t>(frame.width_px) != spec.input_width ||
        static_cast<std::size_t>(frame.height_px) != spec.input_height || spec.input_channels != 3) {
        throw ShapeError("frame " + std::to_string(frame.width_px) + "x" + std::to_string(frame.height_px) +
                         " does not match model input " + std::to_string(spec.input_width) + "x" +
                         std::to_string(spec.input_height));
    }
    Tensor input(Shape{1, spec.input_height, spec.input_width, 3});
    frame_to_input(frame, input.data());
    const Tensor out = net.predict(weights, input);
    return {out[0], out[1]};
}

template struct ModelWeights<float>;
template struct ModelWeights<double>;
template class Network<float>;
template class Network<double>;

}  // namespace pilotstack::nn
