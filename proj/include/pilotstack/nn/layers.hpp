#pragma once

#include <cstdint>
#include <vector>

#include "pilotstack/nn/tensor.hpp"
#include "pilotstack/random.hpp"

namespace pilotstack::nn {

// Layer kernels. Image tensors are HWC, optionally with a leading batch
// dimension (NHWC). Convolutions use valid padding. Kernels are laid out as
// [kh, kw, in_channels, filters]; dense weights as [in, out].

template <typename T>
BasicTensor<T> conv2d_forward(const BasicTensor<T>& input, const BasicTensor<T>& kernel, const BasicTensor<T>& bias,
                              std::size_t stride);

template <typename T>
struct Conv2dGrads {
    BasicTensor<T> input;
    BasicTensor<T> kernel;
    BasicTensor<T> bias;
};

/// Gradients of the convolution with respect to all three operands. Pass
/// `need_input_grad = false` for the first layer of a network.
template <typename T>
Conv2dGrads<T> conv2d_backward(const BasicTensor<T>& input, const BasicTensor<T>& kernel,
                               const BasicTensor<T>& grad_out, std::size_t stride, bool need_input_grad = true);

/// y = x W + b for x of shape [in] or [n, in].
template <typename T>
BasicTensor<T> dense_forward(const BasicTensor<T>& input, const BasicTensor<T>& weight, const BasicTensor<T>& bias);

template <typename T>
struct DenseGrads {
    BasicTensor<T> input;
    BasicTensor<T> weight;
    BasicTensor<T> bias;
};

template <typename T>
DenseGrads<T> dense_backward(const BasicTensor<T>& input, const BasicTensor<T>& weight,
                             const BasicTensor<T>& grad_out, bool need_input_grad = true);

template <typename T>
BasicTensor<T> relu_forward(const BasicTensor<T>& input);

/// Gradient of max(0, x): passes grad where the forward input was positive.
template <typename T>
BasicTensor<T> relu_backward(const BasicTensor<T>& input, const BasicTensor<T>& grad_out);

enum class DropoutMode { train, eval };

template <typename T>
struct DropoutResult {
    BasicTensor<T> output;
    BasicTensor<T> mask;  // 0 or 1/(1 - rate); empty in eval mode
};

/// Inverted dropout: in train mode each element is zeroed with probability
/// `rate` and survivors are scaled by 1/(1 - rate); eval mode is the identity.
template <typename T>
DropoutResult<T> dropout(const BasicTensor<T>& input, double rate, DropoutMode mode, Rng& rng);

template <typename T>
BasicTensor<T> dropout_backward(const BasicTensor<T>& grad_out, const BasicTensor<T>& mask);

/// Output spatial size for valid padding: floor((in - k) / s) + 1.
std::size_t conv_output_size(std::size_t in, std::size_t kernel, std::size_t stride);

}  // namespace pilotstack::nn
