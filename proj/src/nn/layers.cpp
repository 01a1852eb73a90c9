#include "pilotstack/nn/layers.hpp"

#include <cstring>
#include <mutex>

#include "gemm.hpp"

namespace pilotstack::nn {

namespace detail {

void pin_blas_threads() {
    static std::once_flag once;
    std::call_once(once, [] { openblas_set_num_threads(1); });
}

}  // namespace detail

namespace {

struct ConvGeometry {
    std::size_t batch = 1;
    std::size_t height = 0, width = 0, channels = 0;
    std::size_t kh = 0, kw = 0, filters = 0;
    std::size_t stride = 1;
    std::size_t out_h = 0, out_w = 0;
    bool batched = false;

    std::size_t patch() const { return kh * kw * channels; }
    std::size_t rows() const { return out_h * out_w; }
    std::size_t in_sample() const { return height * width * channels; }
    std::size_t out_sample() const { return out_h * out_w * filters; }
};

template <typename T>
ConvGeometry conv_geometry(const BasicTensor<T>& input, const BasicTensor<T>& kernel, std::size_t stride) {
    ConvGeometry g;
    if (input.rank() == 3) {
        g.height = input.dim(0);
        g.width = input.dim(1);
        g.channels = input.dim(2);
    } else if (input.rank() == 4) {
        g.batched = true;
        g.batch = input.dim(0);
        g.height = input.dim(1);
        g.width = input.dim(2);
        g.channels = input.dim(3);
    } else {
        throw ShapeError("conv2d input must be HWC or NHWC, got " + shape_string(input.shape()));
    }
    if (kernel.rank() != 4) throw ShapeError("conv2d kernel must be [kh, kw, c, f], got " + shape_string(kernel.shape()));
    g.kh = kernel.dim(0);
    g.kw = kernel.dim(1);
    g.filters = kernel.dim(3);
    if (kernel.dim(2) != g.channels) {
        throw ShapeError("conv2d kernel expects " + std::to_string(kernel.dim(2)) + " channels, input has " +
                         std::to_string(g.channels));
    }
    if (stride < 1) throw ShapeError("conv2d stride must be >= 1");
    if (g.kh > g.height || g.kw > g.width || g.kh == 0 || g.kw == 0) {
        throw ShapeError("conv2d kernel " + shape_string(kernel.shape()) + " does not fit input " +
                         shape_string(input.shape()));
    }
    g.stride = stride;
    g.out_h = conv_output_size(g.height, g.kh, stride);
    g.out_w = conv_output_size(g.width, g.kw, stride);
    return g;
}

template <typename T>
void im2col(const T* in, const ConvGeometry& g, T* col) {
    const std::size_t run = g.kw * g.channels;
    for (std::size_t oy = 0; oy < g.out_h; ++oy) {
        for (std::size_t ox = 0; ox < g.out_w; ++ox) {
            T* row = col + (oy * g.out_w + ox) * g.patch();
            for (std::size_t u = 0; u < g.kh; ++u) {
                const T* src = in + ((oy * g.stride + u) * g.width + ox * g.stride) * g.channels;
                std::memcpy(row + u * run, src, run * sizeof(T));
            }
        }
    }
}

template <typename T>
void col2im_add(const T* col, const ConvGeometry& g, T* in) {
    const std::size_t run = g.kw * g.channels;
    for (std::size_t oy = 0; oy < g.out_h; ++oy) {
        for (std::size_t ox = 0; ox < g.out_w; ++ox) {
            const T* row = col + (oy * g.out_w + ox) * g.patch();
            for (std::size_t u = 0; u < g.kh; ++u) {
                T* dst = in + ((oy * g.stride + u) * g.width + ox * g.stride) * g.channels;
                const T* src = row + u * run;
                for (std::size_t j = 0; j < run; ++j) dst[j] += src[j];
            }
        }
    }
}

int as_int(std::size_t v) { return static_cast<int>(v); }

}  // namespace

std::size_t conv_output_size(std::size_t in, std::size_t kernel, std::size_t stride) {
    if (kernel > in || stride == 0) return 0;
    return (in - kernel) / stride + 1;
}

template <typename T>
BasicTensor<T> conv2d_forward(const BasicTensor<T>& input, const BasicTensor<T>& kernel, const BasicTensor<T>& bias,
                              std::size_t stride) {
    const ConvGeometry g = conv_geometry(input, kernel, stride);
    if (bias.size() != g.filters) throw ShapeError("conv2d bias must have one entry per filter");
    detail::pin_blas_threads();

    BasicTensor<T> out(g.batched ? Shape{g.batch, g.out_h, g.out_w, g.filters} : Shape{g.out_h, g.out_w, g.filters});
    std::vector<T> col(g.rows() * g.patch());
    for (std::size_t n = 0; n < g.batch; ++n) {
        T* dst = out.data() + n * g.out_sample();
        for (std::size_t r = 0; r < g.rows(); ++r) std::memcpy(dst + r * g.filters, bias.data(), g.filters * sizeof(T));
        im2col(input.data() + n * g.in_sample(), g, col.data());
        detail::gemm(false, false, as_int(g.rows()), as_int(g.filters), as_int(g.patch()), T{1}, col.data(),
                     as_int(g.patch()), kernel.data(), as_int(g.filters), T{1}, dst, as_int(g.filters));
    }
    return out;
}

template <typename T>
Conv2dGrads<T> conv2d_backward(const BasicTensor<T>& input, const BasicTensor<T>& kernel,
                               const BasicTensor<T>& grad_out, std::size_t stride, bool need_input_grad) {
    const ConvGeometry g = conv_geometry(input, kernel, stride);
    const Shape expected =
        g.batched ? Shape{g.batch, g.out_h, g.out_w, g.filters} : Shape{g.out_h, g.out_w, g.filters};
    if (grad_out.shape() != expected) {
        throw ShapeError("conv2d grad_out " + shape_string(grad_out.shape()) + " does not match output " +
                         shape_string(expected));
    }
    detail::pin_blas_threads();

    Conv2dGrads<T> grads{need_input_grad ? BasicTensor<T>(input.shape()) : BasicTensor<T>(),
                         BasicTensor<T>(kernel.shape()), BasicTensor<T>(Shape{g.filters})};
    std::vector<T> col(g.rows() * g.patch());
    for (std::size_t n = 0; n < g.batch; ++n) {
        const T* go = grad_out.data() + n * g.out_sample();
        im2col(input.data() + n * g.in_sample(), g, col.data());
        detail::gemm(true, false, as_int(g.patch()), as_int(g.filters), as_int(g.rows()), T{1}, col.data(),
                     as_int(g.patch()), go, as_int(g.filters), T{1}, grads.kernel.data(), as_int(g.filters));
        for (std::size_t r = 0; r < g.rows(); ++r) {
            for (std::size_t f = 0; f < g.filters; ++f) grads.bias[f] += go[r * g.filters + f];
        }
        if (need_input_grad) {
            detail::gemm(false, true, as_int(g.rows()), as_int(g.patch()), as_int(g.filters), T{1}, go,
                         as_int(g.filters), kernel.data(), as_int(g.filters), T{0}, col.data(), as_int(g.patch()));
            col2im_add(col.data(), g, grads.input.data() + n * g.in_sample());
        }
    }
    return grads;
}

namespace {

template <typename T>
std::pair<std::size_t, std::size_t> dense_dims(const BasicTensor<T>& input, const BasicTensor<T>& weight) {
    if (weight.rank() != 2) throw ShapeError("dense weight must be [in, out], got " + shape_string(weight.shape()));
    std::size_t batch = 1;
    std::size_t in = 0;
    if (input.rank() == 1) {
        in = input.dim(0);
    } else if (input.rank() == 2) {
        batch = input.dim(0);
        in = input.dim(1);
    } else {
        throw ShapeError("dense input must be [in] or [n, in], got " + shape_string(input.shape()));
    }
    if (in != weight.dim(0)) {
        throw ShapeError("dense input width " + std::to_string(in) + " does not match weight " +
                         shape_string(weight.shape()));
    }
    return {batch, in};
}

}  // namespace

template <typename T>
BasicTensor<T> dense_forward(const BasicTensor<T>& input, const BasicTensor<T>& weight, const BasicTensor<T>& bias) {
    const auto [batch, in] = dense_dims(input, weight);
    const std::size_t out_w = weight.dim(1);
    if (bias.size() != out_w) throw ShapeError("dense bias must have one entry per output");
    detail::pin_blas_threads();

    BasicTensor<T> out(input.rank() == 1 ? Shape{out_w} : Shape{batch, out_w});
    for (std::size_t n = 0; n < batch; ++n) std::memcpy(out.data() + n * out_w, bias.data(), out_w * sizeof(T));
    detail::gemm(false, false, as_int(batch), as_int(out_w), as_int(in), T{1}, input.data(), as_int(in),
                 weight.data(), as_int(out_w), T{1}, out.data(), as_int(out_w));
    return out;
}

template <typename T>
DenseGrads<T> dense_backward(const BasicTensor<T>& input, const BasicTensor<T>& weight,
                             const BasicTensor<T>& grad_out, bool need_input_grad) {
    const auto [batch, in] = dense_dims(input, weight);
    const std::size_t out_w = weight.dim(1);
    if (grad_out.size() != batch * out_w) throw ShapeError("dense grad_out does not match output shape");
    detail::pin_blas_threads();

    DenseGrads<T> grads{need_input_grad ? BasicTensor<T>(input.shape()) : BasicTensor<T>(),
                        BasicTensor<T>(weight.shape()), BasicTensor<T>(Shape{out_w})};
    detail::gemm(true, false, as_int(in), as_int(out_w), as_int(batch), T{1}, input.data(), as_int(in),
                 grad_out.data(), as_int(out_w), T{0}, grads.weight.data(), as_int(out_w));
    for (std::size_t n = 0; n < batch; ++n) {
        for (std::size_t j = 0; j < out_w; ++j) grads.bias[j] += grad_out[n * out_w + j];
    }
    if (need_input_grad) {
        detail::gemm(false, true, as_int(batch), as_int(in), as_int(out_w), T{1}, grad_out.data(), as_int(out_w),
                     weight.data(), as_int(out_w), T{0}, grads.input.data(), as_int(in));
    }
    return grads;
}

template <typename T>
BasicTensor<T> relu_forward(const BasicTensor<T>& input) {
    BasicTensor<T> out(input.shape());
    for (std::size_t i = 0; i < input.size(); ++i) out[i] = input[i] > T{0} ? input[i] : T{0};
    return out;
}

template <typename T>
BasicTensor<T> relu_backward(const BasicTensor<T>& input, const BasicTensor<T>& grad_out) {
    if (input.shape() != grad_out.shape()) throw ShapeError("relu grad_out shape mismatch");
    BasicTensor<T> out(input.shape());
    for (std::size_t i = 0; i < input.size(); ++i) out[i] = input[i] > T{0} ? grad_out[i] : T{0};
    return out;
}

template <typename T>
DropoutResult<T> dropout(const BasicTensor<T>& input, double rate, DropoutMode mode, Rng& rng) {
    if (!(rate >= 0.0 && rate < 1.0)) throw DomainError("dropout rate must lie in [0, 1)");
    if (mode == DropoutMode::eval) return {input, {}};
    const T scale = static_cast<T>(1.0 / (1.0 - rate));
    DropoutResult<T> r{BasicTensor<T>(input.shape()), BasicTensor<T>(input.shape())};
    for (std::size_t i = 0; i < input.size(); ++i) {
        const T m = uniform01(rng) < rate ? T{0} : scale;
        r.mask[i] = m;
        r.output[i] = input[i] * m;
    }
    return r;
}

template <typename T>
BasicTensor<T> dropout_backward(const BasicTensor<T>& grad_out, const BasicTensor<T>& mask) {
    if (mask.empty()) return grad_out;
    if (mask.shape() != grad_out.shape()) throw ShapeError("dropout mask shape mismatch");
    BasicTensor<T> out(grad_out.shape());
    for (std::size_t i = 0; i < grad_out.size(); ++i) out[i] = grad_out[i] * mask[i];
    return out;
}

#define PILOTSTACK_INSTANTIATE_LAYERS(T)                                                                          \
    template BasicTensor<T> conv2d_forward(const BasicTensor<T>&, const BasicTensor<T>&, const BasicTensor<T>&,  \
                                           std::size_t);                                                          \
    template Conv2dGrads<T> conv2d_backward(const BasicTensor<T>&, const BasicTensor<T>&, const BasicTensor<T>&, \
                                            std::size_t, bool);                                                   \
    template BasicTensor<T> dense_forward(const BasicTensor<T>&, const BasicTensor<T>&, const BasicTensor<T>&);  \
    template DenseGrads<T> dense_backward(const BasicTensor<T>&, const BasicTensor<T>&, const BasicTensor<T>&,   \
                                          bool);                                                                  \
    template BasicTensor<T> relu_forward(const BasicTensor<T>&);                                                 \
    template BasicTensor<T> relu_backward(const BasicTensor<T>&, const BasicTensor<T>&);                         \
    template DropoutResult<T> dropout(const BasicTensor<T>&, double, DropoutMode, Rng&);                         \
    template BasicTensor<T> dropout_backward(const BasicTensor<T>&, const BasicTensor<T>&);

PILOTSTACK_INSTANTIATE_LAYERS(float)
PILOTSTACK_INSTANTIATE_LAYERS(double)

#undef PILOTSTACK_INSTANTIATE_LAYERS

}  // namespace pilotstack::nn
