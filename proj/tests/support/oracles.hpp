#pragma once

// Independent reference implementations used by the unit and acceptance
// tests. Everything here is written for clarity, not speed, and shares no
// code with the library beyond the tensor container.

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "pilotstack/nn/layers.hpp"
#include "pilotstack/nn/network.hpp"
#include "pilotstack/random.hpp"

namespace oracle {

using pilotstack::Rng;
using pilotstack::nn::Shape;
using pilotstack::nn::Tensor64;

inline Tensor64 random_tensor(const Shape& shape, Rng& rng, double lo = -1.0, double hi = 1.0) {
    Tensor64 t(shape);
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = pilotstack::uniform(rng, lo, hi);
    return t;
}

inline std::size_t rand_int(Rng& rng, std::size_t lo, std::size_t hi) {
    return lo + static_cast<std::size_t>(pilotstack::uniform_index(rng, hi - lo + 1));
}

/// Direct convolution over an NHWC batch, valid padding.
inline Tensor64 brute_conv2d(const Tensor64& in, const Tensor64& k, const Tensor64& b, std::size_t stride) {
    const std::size_t n = in.dim(0), h = in.dim(1), w = in.dim(2), c = in.dim(3);
    const std::size_t kh = k.dim(0), kw = k.dim(1), f = k.dim(3);
    const std::size_t oh = (h - kh) / stride + 1, ow = (w - kw) / stride + 1;
    Tensor64 out({n, oh, ow, f});
    for (std::size_t s = 0; s < n; ++s)
        for (std::size_t y = 0; y < oh; ++y)
            for (std::size_t x = 0; x < ow; ++x)
                for (std::size_t o = 0; o < f; ++o) {
                    double acc = b[o];
                    for (std::size_t i = 0; i < kh; ++i)
                        for (std::size_t j = 0; j < kw; ++j)
                            for (std::size_t ch = 0; ch < c; ++ch) {
                                const double v = in[((s * h + y * stride + i) * w + x * stride + j) * c + ch];
                                acc += v * k[((i * kw + j) * c + ch) * f + o];
                            }
                    out[((s * oh + y) * ow + x) * f + o] = acc;
                }
    return out;
}

inline Tensor64 brute_dense(const Tensor64& in, const Tensor64& wt, const Tensor64& b) {
    const std::size_t n = in.dim(0), ni = wt.dim(0), no = wt.dim(1);
    Tensor64 out({n, no});
    for (std::size_t s = 0; s < n; ++s)
        for (std::size_t o = 0; o < no; ++o) {
            double acc = b[o];
            for (std::size_t i = 0; i < ni; ++i) acc += in[s * ni + i] * wt[i * no + o];
            out[s * no + o] = acc;
        }
    return out;
}

/// ||a - b|| / max(||a||, ||b||); zero when both vanish.
inline double relative_error(const std::vector<double>& a, const std::vector<double>& b) {
    double diff = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        diff += (a[i] - b[i]) * (a[i] - b[i]);
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    const double scale = std::sqrt(std::max(na, nb));
    return scale == 0.0 ? 0.0 : std::sqrt(diff) / scale;
}

/// Central differences of a scalar function with respect to every element of `x`.
inline std::vector<double> numeric_gradient(const std::function<double(const Tensor64&)>& f, Tensor64 x, double h) {
    std::vector<double> g(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double orig = x[i];
        x[i] = orig + h;
        const double up = f(x);
        x[i] = orig - h;
        const double down = f(x);
        x[i] = orig;
        g[i] = (up - down) / (2.0 * h);
    }
    return g;
}

/// Projection loss L = sum(out * r); its gradient with respect to out is r.
inline double project(const Tensor64& out, const Tensor64& r) {
    double s = 0.0;
    for (std::size_t i = 0; i < out.size(); ++i) s += out[i] * r[i];
    return s;
}

inline std::vector<double> as_vector(const Tensor64& t) { return {t.storage().begin(), t.storage().end()}; }

struct GradSuiteResult {
    std::size_t shapes = 0;
    std::size_t checks = 0;
    double max_error = 0.0;
    std::string worst;
    void add(const std::string& what, double err) {
        ++checks;
        if (worst.empty() || err > max_error) {
            max_error = err;
            worst = what;
        }
    }
};

constexpr double kFdStep = 1e-5;

inline void check_conv(Rng& rng, GradSuiteResult& res) {
    namespace nn = pilotstack::nn;
    const std::size_t n = rand_int(rng, 1, 2), c = rand_int(rng, 1, 3), f = rand_int(rng, 1, 4);
    const std::size_t k = rand_int(rng, 1, 3), stride = rand_int(rng, 1, 2);
    const std::size_t h = rand_int(rng, k, k + 5), w = rand_int(rng, k, k + 5);
    const Tensor64 in = random_tensor({n, h, w, c}, rng);
    const Tensor64 kern = random_tensor({k, k, c, f}, rng);
    const Tensor64 bias = random_tensor({f}, rng);
    const Tensor64 out = nn::conv2d_forward(in, kern, bias, stride);
    const Tensor64 r = random_tensor(out.shape(), rng);
    const auto g = nn::conv2d_backward(in, kern, r, stride);
    const std::string tag = "conv in " + nn::shape_string(in.shape()) + " k" + std::to_string(k) + " s" +
                            std::to_string(stride) + " f" + std::to_string(f);
    res.add(tag + " d/input", relative_error(as_vector(g.input), numeric_gradient([&](const Tensor64& x) {
                                                  return project(nn::conv2d_forward(x, kern, bias, stride), r);
                                              }, in, kFdStep)));
    res.add(tag + " d/kernel", relative_error(as_vector(g.kernel), numeric_gradient([&](const Tensor64& x) {
                                                   return project(nn::conv2d_forward(in, x, bias, stride), r);
                                               }, kern, kFdStep)));
    res.add(tag + " d/bias", relative_error(as_vector(g.bias), numeric_gradient([&](const Tensor64& x) {
                                                 return project(nn::conv2d_forward(in, kern, x, stride), r);
                                             }, bias, kFdStep)));
    ++res.shapes;
}

inline void check_dense(Rng& rng, GradSuiteResult& res) {
    namespace nn = pilotstack::nn;
    const std::size_t n = rand_int(rng, 1, 4), ni = rand_int(rng, 1, 12), no = rand_int(rng, 1, 8);
    const Tensor64 in = random_tensor({n, ni}, rng);
    const Tensor64 wt = random_tensor({ni, no}, rng);
    const Tensor64 bias = random_tensor({no}, rng);
    const Tensor64 r = random_tensor({n, no}, rng);
    const auto g = nn::dense_backward(in, wt, r);
    const std::string tag = "dense " + std::to_string(n) + "x" + std::to_string(ni) + "->" + std::to_string(no);
    res.add(tag + " d/input", relative_error(as_vector(g.input), numeric_gradient([&](const Tensor64& x) {
                                                  return project(nn::dense_forward(x, wt, bias), r);
                                              }, in, kFdStep)));
    res.add(tag + " d/weight", relative_error(as_vector(g.weight), numeric_gradient([&](const Tensor64& x) {
                                                   return project(nn::dense_forward(in, x, bias), r);
                                               }, wt, kFdStep)));
    res.add(tag + " d/bias", relative_error(as_vector(g.bias), numeric_gradient([&](const Tensor64& x) {
                                                 return project(nn::dense_forward(in, wt, x), r);
                                             }, bias, kFdStep)));
    ++res.shapes;
}

/// Inputs are kept at least 0.05 away from the kink so differences stay one-sided.
inline void check_relu(Rng& rng, GradSuiteResult& res) {
    namespace nn = pilotstack::nn;
    Tensor64 in = random_tensor({rand_int(rng, 1, 3), rand_int(rng, 1, 20)}, rng);
    for (std::size_t i = 0; i < in.size(); ++i) {
        if (std::abs(in[i]) < 0.05) in[i] = in[i] < 0 ? in[i] - 0.05 : in[i] + 0.05;
    }
    const Tensor64 r = random_tensor(in.shape(), rng);
    const auto g = nn::relu_backward(in, r);
    res.add("relu " + nn::shape_string(in.shape()),
            relative_error(as_vector(g), numeric_gradient([&](const Tensor64& x) { return project(nn::relu_forward(x), r); },
                                                          in, kFdStep)));
    ++res.shapes;
}

/// Dropout with a frozen mask (same seed for every evaluation) is linear.
inline void check_dropout(Rng& rng, GradSuiteResult& res) {
    namespace nn = pilotstack::nn;
    const Tensor64 in = random_tensor({rand_int(rng, 1, 3), rand_int(rng, 2, 30)}, rng);
    const double rate = pilotstack::uniform(rng, 0.05, 0.6);
    const std::uint64_t seed = rng();
    const Tensor64 r = random_tensor(in.shape(), rng);
    Rng mask_rng(seed);
    const auto fwd = nn::dropout(in, rate, nn::DropoutMode::train, mask_rng);
    const auto g = nn::dropout_backward(r, fwd.mask);
    res.add("dropout " + nn::shape_string(in.shape()),
            relative_error(as_vector(g), numeric_gradient([&](const Tensor64& x) {
                               Rng again(seed);
                               return project(nn::dropout(x, rate, nn::DropoutMode::train, again).output, r);
                           }, in, kFdStep)));
    ++res.shapes;
}

/// Small random ModelSpec with conv, flatten, dense and (optionally) dropout layers.
inline pilotstack::nn::ModelSpec random_small_spec(Rng& rng, bool with_dropout) {
    namespace nn = pilotstack::nn;
    nn::ModelSpec spec;
    spec.input_height = rand_int(rng, 6, 9);
    spec.input_width = rand_int(rng, 6, 9);
    spec.input_channels = rand_int(rng, 1, 3);
    spec.layers.push_back(nn::Conv2DSpec{rand_int(rng, 2, 3), 3, rand_int(rng, 1, 2), nn::Activation::relu});
    if (with_dropout) spec.layers.push_back(nn::DropoutSpec{0.3});
    spec.layers.push_back(nn::Conv2DSpec{2, 2, 1, nn::Activation::relu});
    spec.layers.push_back(nn::FlattenSpec{});
    spec.layers.push_back(nn::DenseSpec{rand_int(rng, 3, 6), nn::Activation::relu});
    if (with_dropout) spec.layers.push_back(nn::DropoutSpec{0.2});
    spec.layers.push_back(nn::DenseSpec{2, nn::Activation::linear});
    return spec;
}

/// Smallest |pre-activation| over every relu unit, recomputed with the
/// brute-force layers. Used to reject points too close to a kink.
inline double min_relu_margin(const pilotstack::nn::ModelSpec& spec, const pilotstack::nn::ModelWeights<double>& wts,
                              const Tensor64& batch) {
    namespace nn = pilotstack::nn;
    double margin = 1e300;
    Tensor64 x = batch;
    std::size_t p = 0;
    for (const auto& layer : spec.layers) {
        if (const auto* conv = std::get_if<nn::Conv2DSpec>(&layer)) {
            x = brute_conv2d(x, wts.tensors[p], wts.tensors[p + 1], conv->stride);
            p += 2;
            if (conv->activation == nn::Activation::relu) {
                for (std::size_t i = 0; i < x.size(); ++i) {
                    margin = std::min(margin, std::abs(x[i]));
                    x[i] = std::max(0.0, x[i]);
                }
            }
        } else if (const auto* dense = std::get_if<nn::DenseSpec>(&layer)) {
            x = brute_dense(x, wts.tensors[p], wts.tensors[p + 1]);
            p += 2;
            if (dense->activation == nn::Activation::relu) {
                for (std::size_t i = 0; i < x.size(); ++i) {
                    margin = std::min(margin, std::abs(x[i]));
                    x[i] = std::max(0.0, x[i]);
                }
            }
        } else if (std::holds_alternative<nn::FlattenSpec>(layer)) {
            x = x.reshaped({x.dim(0), x.size() / x.dim(0)});
        }
        // Dropout scales by a positive factor or zeroes, so it cannot move a
        // later unit across zero by itself; margins are checked in eval mode.
    }
    return margin;
}

/// Whole-network check: gradients of every parameter tensor and of the input.
inline void check_network(Rng& rng, GradSuiteResult& res, bool with_dropout) {
    namespace nn = pilotstack::nn;
    for (int attempt = 0; attempt < 50; ++attempt) {
        const auto spec = random_small_spec(rng, with_dropout);
        const nn::Network<double> net(spec);
        auto wts = net.initialize(rng());
        for (auto& t : wts.tensors)
            for (std::size_t i = 0; i < t.size(); ++i) t[i] += pilotstack::uniform(rng, -0.1, 0.1);
        const std::size_t n = rand_int(rng, 1, 2);
        const Tensor64 batch = random_tensor({n, spec.input_height, spec.input_width, spec.input_channels}, rng);
        if (!with_dropout && min_relu_margin(spec, wts, batch) < 1e-3) continue;

        const std::uint64_t drop_seed = rng();
        const auto mode = with_dropout ? nn::DropoutMode::train : nn::DropoutMode::eval;
        const auto run = [&](const nn::ModelWeights<double>& w, const Tensor64& x, nn::Network<double>::Trace* trace) {
            Rng drop(drop_seed);
            return net.forward(w, x, mode, &drop, trace);
        };
        nn::Network<double>::Trace trace;
        const Tensor64 out = run(wts, batch, &trace);
        const Tensor64 r = random_tensor(out.shape(), rng);
        Tensor64 grad_in;
        const auto grads = net.backward(wts, trace, r, &grad_in);

        const std::string tag = std::string(with_dropout ? "network+dropout " : "network ") +
                                std::to_string(spec.input_height) + "x" + std::to_string(spec.input_width) + "x" +
                                std::to_string(spec.input_channels);
        for (std::size_t t = 0; t < wts.tensors.size(); ++t) {
            const auto fd = numeric_gradient(
                [&](const Tensor64& x) {
                    auto w2 = wts;
                    w2.tensors[t] = x;
                    return project(run(w2, batch, nullptr), r);
                },
                wts.tensors[t], kFdStep);
            res.add(tag + " d/" + wts.names[t], relative_error(as_vector(grads[t]), fd));
        }
        res.add(tag + " d/input", relative_error(as_vector(grad_in), numeric_gradient([&](const Tensor64& x) {
                                                      return project(run(wts, x, nullptr), r);
                                                  }, batch, kFdStep)));
        ++res.shapes;
        return;
    }
    res.add("network: no kink-free sample found", 1.0);
}

/// The full randomized suite: conv, dense, relu, dropout and whole networks.
inline GradSuiteResult gradient_suite(std::uint64_t seed) {
    Rng rng(seed);
    GradSuiteResult res;
    for (int i = 0; i < 40; ++i) check_conv(rng, res);
    for (int i = 0; i < 30; ++i) check_dense(rng, res);
    for (int i = 0; i < 12; ++i) check_relu(rng, res);
    for (int i = 0; i < 10; ++i) check_dropout(rng, res);
    for (int i = 0; i < 6; ++i) check_network(rng, res, false);
    for (int i = 0; i < 4; ++i) check_network(rng, res, true);
    return res;
}

struct ConvOracleResult {
    double max_diff64 = 0.0;  // largest |fast - brute| of the 64-bit instantiation
    double max_diff32 = 0.0;  // same for 32-bit
    double max_ratio32 = 0.0; // 32-bit error over the a-priori float summation bound
};

/// Conv forward against the brute-force loops on random small problems. The
/// 32-bit error is also measured against gamma_m * sum|terms| with
/// gamma_m = m u / (1 - m u), u = 2^-24 and m terms per output, which holds for
/// any summation order.
inline ConvOracleResult conv_oracle(std::uint64_t seed, int cases) {
    namespace nn = pilotstack::nn;
    Rng rng(seed);
    ConvOracleResult res;
    for (int t = 0; t < cases; ++t) {
        const std::size_t n = rand_int(rng, 1, 3), c = rand_int(rng, 1, 3), f = rand_int(rng, 1, 6);
        const std::size_t k = rand_int(rng, 1, 3), stride = rand_int(rng, 1, 3);
        const std::size_t h = rand_int(rng, k, k + 10), w = rand_int(rng, k, k + 10);
        // Inputs are rounded to float so both precisions see identical operands.
        const Tensor64 in = random_tensor({n, h, w, c}, rng).cast<float>().cast<double>();
        const Tensor64 kern = random_tensor({k, k, c, f}, rng).cast<float>().cast<double>();
        const Tensor64 bias = random_tensor({f}, rng).cast<float>().cast<double>();
        const auto fast32 = nn::conv2d_forward(in.cast<float>(), kern.cast<float>(), bias.cast<float>(), stride);
        const auto fast64 = nn::conv2d_forward(in, kern, bias, stride);
        const auto ref = brute_conv2d(in, kern, bias, stride);

        auto abs_of = [](Tensor64 x) {
            for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::abs(x[i]);
            return x;
        };
        const auto magnitude = brute_conv2d(abs_of(in), abs_of(kern), abs_of(bias), stride);
        const double m = static_cast<double>(k * k * c + 1);
        const double u = std::ldexp(1.0, -24);
        const double gamma = m * u / (1.0 - m * u);
        for (std::size_t i = 0; i < ref.size(); ++i) {
            const double e32 = std::abs(static_cast<double>(fast32[i]) - ref[i]);
            res.max_diff64 = std::max(res.max_diff64, std::abs(fast64[i] - ref[i]));
            res.max_diff32 = std::max(res.max_diff32, e32);
            if (magnitude[i] > 0.0) res.max_ratio32 = std::max(res.max_ratio32, e32 / (gamma * magnitude[i]));
        }
    }
    return res;
}

}  // namespace oracle
