#include <doctest.h>

#include <cmath>
#include <fstream>
#include <limits>

#include "oracles.hpp"
#include "pilotstack/errors.hpp"
#include "pilotstack/nn/layers.hpp"
#include "pilotstack/nn/model_spec.hpp"
#include "pilotstack/nn/network.hpp"
#include "pilotstack/nn/trainer.hpp"
#include "pilotstack/nn/weights_io.hpp"
#include "temp_dir.hpp"

using namespace pilotstack;
using namespace pilotstack::nn;

namespace {

ModelSpec tiny_spec(std::size_t h = 8, std::size_t w = 8) {
    ModelSpec spec;
    spec.input_height = h;
    spec.input_width = w;
    spec.input_channels = 3;
    spec.layers = {Conv2DSpec{4, 3, 1, Activation::relu}, FlattenSpec{}, DenseSpec{8, Activation::relu},
                   DenseSpec{2, Activation::linear}};
    return spec;
}

TrainerConfig quick_config(int epochs) {
    TrainerConfig cfg;
    cfg.epochs = epochs;
    cfg.batch_size = 16;
    cfg.learning_rate = 3e-3;
    cfg.seed = 5;
    return cfg;
}

}  // namespace

TEST_CASE("conv2d hand example") {
    const Tensor64 in({3, 3, 1}, std::vector<double>{1, 2, 3, 4, 5, 6, 7, 8, 9});
    const Tensor64 k({2, 2, 1, 1}, std::vector<double>{1, 0, 0, 1});
    const Tensor64 b({1}, 0.0);
    const auto out = conv2d_forward(in, k, b, 1);
    REQUIRE(out.shape() == Shape{2, 2, 1});
    CHECK(out[0] == 6);
    CHECK(out[1] == 8);
    CHECK(out[2] == 12);
    CHECK(out[3] == 14);
}

TEST_CASE("1x1 identity kernel copies channels") {
    Rng rng(1);
    const Tensor64 in = oracle::random_tensor({5, 4, 3}, rng);
    Tensor64 k({1, 1, 3, 3}, 0.0);
    for (std::size_t c = 0; c < 3; ++c) k[c * 3 + c] = 1.0;
    CHECK(conv2d_forward(in, k, Tensor64({3}, 0.0), 1) == in);
}

TEST_CASE("conv2d output size and shape errors") {
    CHECK(conv_output_size(120, 5, 2) == 58);
    CHECK(conv_output_size(9, 3, 3) == 3);
    const Tensor64 in({6, 6, 2});
    CHECK_THROWS_AS(conv2d_forward(in, Tensor64({3, 3, 3, 1}), Tensor64({1}), 1), ShapeError);
    CHECK_THROWS_AS(conv2d_forward(in, Tensor64({7, 7, 2, 1}), Tensor64({1}), 1), ShapeError);
    CHECK_THROWS_AS(conv2d_forward(in, Tensor64({3, 3, 2, 2}), Tensor64({1}), 1), ShapeError);
}

TEST_CASE("conv2d matches the brute-force oracle") {
    Rng rng(2);
    const Tensor64 in = oracle::random_tensor({8, 8, 3}, rng);
    const Tensor64 k = oracle::random_tensor({3, 3, 3, 4}, rng);
    const Tensor64 b = oracle::random_tensor({4}, rng);
    const auto fast = conv2d_forward(in, k, b, 1);
    const auto ref = oracle::brute_conv2d(in.reshaped({1, 8, 8, 3}), k, b, 1);
    REQUIRE(fast.size() == ref.size());
    double worst = 0.0;
    for (std::size_t i = 0; i < ref.size(); ++i) worst = std::max(worst, std::abs(fast[i] - ref[i]));
    CHECK(worst < 1e-6);

    const auto res = oracle::conv_oracle(3, 60);
    CHECK(res.max_diff64 < 1e-6);
    CHECK(res.max_ratio32 <= 1.0);
}

TEST_CASE("conv2d backward identities") {
    Rng rng(4);
    const Tensor64 in = oracle::random_tensor({2, 7, 6, 3}, rng);
    const Tensor64 k = oracle::random_tensor({3, 3, 3, 5}, rng);
    const Tensor64 b = oracle::random_tensor({5}, rng);
    const auto out = conv2d_forward(in, k, b, 2);
    const auto zero = conv2d_backward(in, k, Tensor64(out.shape(), 0.0), 2);
    for (double v : zero.input.values()) CHECK(v == 0.0);
    for (double v : zero.kernel.values()) CHECK(v == 0.0);
    for (double v : zero.bias.values()) CHECK(v == 0.0);

    const Tensor64 g = oracle::random_tensor(out.shape(), rng);
    const auto grads = conv2d_backward(in, k, g, 2);
    for (std::size_t f = 0; f < 5; ++f) {
        double sum = 0.0;
        for (std::size_t i = f; i < g.size(); i += 5) sum += g[i];
        CHECK(grads.bias[f] == doctest::Approx(sum).epsilon(1e-12));
    }
}

TEST_CASE("every layer passes finite-difference gradient checks") {
    const auto res = oracle::gradient_suite(2024);
    INFO("worst: " << res.worst << " error " << res.max_error);
    CHECK(res.shapes >= 100);
    CHECK(res.max_error < 1e-6);
}

TEST_CASE("dense identity and relu") {
    Rng rng(6);
    const Tensor64 x = oracle::random_tensor({3, 4}, rng);
    Tensor64 w({4, 4}, 0.0);
    for (std::size_t i = 0; i < 4; ++i) w[i * 4 + i] = 1.0;
    CHECK(dense_forward(x, w, Tensor64({4}, 0.0)) == x);
    CHECK(oracle::brute_dense(x, w, Tensor64({4}, 0.0)) == x);

    const Tensor64 pos({4}, std::vector<double>{0.5, 1.0, 2.0, 3.0});
    Tensor64 neg = pos;
    for (auto& v : neg.storage()) v = -v;
    const Tensor64 rn = relu_forward(neg);
    for (double v : rn.values()) CHECK(v == 0.0);
    CHECK(relu_forward(pos) == pos);
    const Tensor64 mixed({4}, std::vector<double>{-1.0, 2.0, -3.0, 4.0});
    const Tensor64 ones({4}, 1.0);
    CHECK(relu_backward(mixed, ones) == Tensor64({4}, std::vector<double>{0, 1, 0, 1}));
}

TEST_CASE("dropout statistics") {
    Rng rng(7);
    const Tensor64 x({1000000}, 1.0);
    const auto r = dropout(x, 0.5, DropoutMode::train, rng);
    std::size_t survivors = 0;
    double mean = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (r.output[i] != 0.0) {
            ++survivors;
            CHECK(r.output[i] == 2.0);
        }
        mean += r.output[i];
    }
    mean /= static_cast<double>(x.size());
    CHECK(std::abs(static_cast<double>(survivors) / x.size() - 0.5) < 0.002);
    CHECK(std::abs(mean - 1.0) < 0.01);

    const Tensor64 y = oracle::random_tensor({50}, rng);
    CHECK(dropout(y, 0.3, DropoutMode::eval, rng).output == y);
    CHECK(dropout(y, 0.0, DropoutMode::train, rng).output == y);
    CHECK(dropout(y, 0.0, DropoutMode::eval, rng).output == y);
    CHECK_THROWS_AS(dropout(y, 1.0, DropoutMode::train, rng), DomainError);
}

TEST_CASE("default spec is the five-conv stack") {
    const ModelSpec spec = default_model_spec();
    CHECK(count_conv_layers(spec) == 5);
    CHECK(spec.input_height == 120);
    CHECK(spec.input_width == 160);
    const auto shapes = infer_shapes(spec);
    CHECK(shapes.back() == Shape{2});
    const Network<float> net(spec);
    const auto w = net.initialize(1);
    Rng rng(1);
    const Tensor batch = oracle::random_tensor({2, 120, 160, 3}, rng, 0.0, 1.0).cast<float>();
    CHECK(net.predict(w, batch).shape() == Shape{2, 2});
}

TEST_CASE("model spec json round trip and validation") {
    const ModelSpec spec = default_model_spec();
    CHECK(model_spec_from_json(model_spec_to_json(spec)) == spec);
    CHECK(spec_fingerprint(spec) == spec_fingerprint(model_spec_from_json(model_spec_to_json(spec))));
    ModelSpec other = spec;
    other.layers.pop_back();
    CHECK_THROWS_AS(validate_model_spec(other), ConfigError);
    ModelSpec bad_rate = tiny_spec();
    bad_rate.layers.insert(bad_rate.layers.begin() + 1, DropoutSpec{1.0});
    CHECK_THROWS_AS(validate_model_spec(bad_rate), ConfigError);
    ModelSpec too_big = tiny_spec(2, 2);
    CHECK_THROWS_AS(validate_model_spec(too_big), ConfigError);
    CHECK(spec_fingerprint(tiny_spec()) != spec_fingerprint(tiny_spec(9, 8)));
}

TEST_CASE("zero weights give zero outputs") {
    const Network<float> net(tiny_spec());
    sim::ImageFrame frame(8, 8, {200, 100, 50});
    const auto c = infer_controls(net, net.zeros(), frame);
    CHECK(c.steering == 0.0);
    CHECK(c.throttle == 0.0);
}

TEST_CASE("inference is deterministic and checks its input") {
    const Network<float> net(tiny_spec());
    const auto w = net.initialize(9);
    Rng rng(3);
    sim::ImageFrame frame(8, 8);
    for (auto& p : frame.pixels) p = static_cast<std::uint8_t>(uniform_index(rng, 256));
    const auto a = infer_controls(net, w, frame);
    const auto b = infer_controls(net, net.initialize(9), frame);
    CHECK(a.steering == b.steering);
    CHECK(a.throttle == b.throttle);
    CHECK_THROWS_AS(infer_controls(net, w, sim::ImageFrame(9, 8)), ShapeError);

    auto broken = w;
    broken.tensors[0][0] = std::numeric_limits<float>::infinity();
    try {
        infer_controls(net, broken, frame);
        FAIL("expected a numeric error");
    } catch (const NumericError& e) {
        CHECK(std::string(e.what()).find("layer 0") != std::string::npos);
    }
}

TEST_CASE("frame_to_input scales to [0, 1]") {
    sim::ImageFrame frame(2, 1);
    frame.set(0, 0, {0, 255, 51});
    frame.set(1, 0, {255, 0, 102});
    std::vector<double> dst(6);
    frame_to_input(frame, dst.data());
    CHECK(dst[0] == 0.0);
    CHECK(dst[1] == 1.0);
    CHECK(dst[2] == doctest::Approx(0.2));
    CHECK(dst[5] == doctest::Approx(0.4));
}

TEST_CASE("mse loss and its gradient") {
    const Tensor64 p({2, 2}, std::vector<double>{1, 2, 3, 4});
    const Tensor64 t({2, 2}, std::vector<double>{0, 2, 5, 4});
    Tensor64 g;
    CHECK(mse_loss(p, t, &g) == doctest::Approx((1.0 + 4.0) / 4.0));
    CHECK(g == Tensor64({2, 2}, std::vector<double>{0.5, 0.0, -1.0, 0.0}));
}

TEST_CASE("one SGD step matches a hand-computed update") {
    ModelSpec spec;
    spec.input_height = 1;
    spec.input_width = 1;
    spec.input_channels = 2;
    spec.layers = {FlattenSpec{}, DenseSpec{2, Activation::linear}};
    const Network<double> net(spec);
    auto w = net.zeros();
    // W is [in=2, out=2], b is [2].
    w.tensors[0] = Tensor64({2, 2}, std::vector<double>{0.5, -0.25, 1.0, 0.75});
    w.tensors[1] = Tensor64({2}, std::vector<double>{0.1, -0.2});
    const Tensor64 x({2, 1, 1, 2}, std::vector<double>{1.0, 2.0, -1.0, 0.5});
    const Tensor64 target({2, 2}, std::vector<double>{0.0, 1.0, 1.0, 0.0});

    Network<double>::Trace trace;
    const Tensor64 y = net.forward(w, x, DropoutMode::eval, nullptr, &trace);
    Tensor64 g;
    mse_loss(y, target, &g);
    const auto grads = net.backward(w, trace, g);
    TrainerConfig cfg;
    cfg.optimizer = OptimizerKind::sgd;
    cfg.learning_rate = 0.1;
    Optimizer<double> opt(cfg);
    const auto before = w;
    opt.step(w, grads);

    // Hand computation: y = xW + b, dL/dy = 2 (y - t) / 4, dW = x^T dy, db = sum dy.
    double yy[2][2], dy[2][2];
    const double xs[2][2] = {{1.0, 2.0}, {-1.0, 0.5}};
    const double W[2][2] = {{0.5, -0.25}, {1.0, 0.75}};
    const double bb[2] = {0.1, -0.2};
    const double tt[2][2] = {{0.0, 1.0}, {1.0, 0.0}};
    for (int n = 0; n < 2; ++n)
        for (int o = 0; o < 2; ++o) {
            yy[n][o] = bb[o] + xs[n][0] * W[0][o] + xs[n][1] * W[1][o];
            dy[n][o] = 2.0 * (yy[n][o] - tt[n][o]) / 4.0;
        }
    for (int i = 0; i < 2; ++i)
        for (int o = 0; o < 2; ++o) {
            const double dw = xs[0][i] * dy[0][o] + xs[1][i] * dy[1][o];
            CHECK(std::abs(w.tensors[0][i * 2 + o] - (W[i][o] - 0.1 * dw)) < 1e-9);
        }
    for (int o = 0; o < 2; ++o) {
        CHECK(std::abs(w.tensors[1][o] - (bb[o] - 0.1 * (dy[0][o] + dy[1][o]))) < 1e-9);
    }
    CHECK(!(w == before));
}

TEST_CASE("constant targets are learned within 20 epochs") {
    const ModelSpec spec = tiny_spec();
    const Network<float> net(spec);
    TrainingSet data(8, 8);
    Rng rng(11);
    for (int i = 0; i < 512; ++i) {
        sim::ImageFrame f(8, 8);
        for (auto& p : f.pixels) p = static_cast<std::uint8_t>(uniform_index(rng, 256));
        data.add(f, 0.3, 0.5);
    }
    const auto split = dataset::split_indices(data.size(), 0.2, 1);
    auto cfg = quick_config(20);
    cfg.learning_rate = 1e-2;
    const auto result = train(net, data, split, cfg);
    REQUIRE(result.history.epochs.size() == 20);
    CHECK(result.history.epochs.back().val_mse < 1e-4);
    for (std::size_t e = 5; e < result.history.epochs.size(); ++e) {
        CHECK(result.history.epochs[e].train_mse <= result.history.epochs[e - 1].train_mse);
    }
    const auto [val, steer] = evaluate(net, result.weights, data, split.val);
    CHECK(val == doctest::Approx(result.history.epochs.back().val_mse).epsilon(1e-6));
    CHECK(steer < 1e-4);
}

TEST_CASE("brightness regression is learned within 50 epochs") {
    const Network<float> net(tiny_spec());
    TrainingSet data(8, 8);
    Rng rng(12);
    for (int i = 0; i < 400; ++i) {
        sim::ImageFrame f(8, 8);
        const int lo = static_cast<int>(uniform_index(rng, 192));
        double sum = 0.0;
        for (auto& p : f.pixels) {
            p = static_cast<std::uint8_t>(lo + static_cast<int>(uniform_index(rng, 64)));
            sum += p;
        }
        const double mean = sum / static_cast<double>(f.pixels.size()) / 255.0;
        data.add(f, 2.0 * mean - 1.0, 0.0);
    }
    const auto split = dataset::split_indices(data.size(), 0.2, 2);
    const auto result = train(net, data, split, quick_config(50));
    CHECK(result.history.epochs.back().val_mse < 1e-2);
}

TEST_CASE("training is reproducible for a fixed seed") {
    const Network<float> net(tiny_spec());
    TrainingSet data(8, 8);
    Rng rng(13);
    for (int i = 0; i < 64; ++i) {
        sim::ImageFrame f(8, 8);
        for (auto& p : f.pixels) p = static_cast<std::uint8_t>(uniform_index(rng, 256));
        data.add(f, uniform(rng, -1, 1), uniform(rng, 0, 1));
    }
    auto spec = tiny_spec();
    spec.layers.insert(spec.layers.begin() + 3, DropoutSpec{0.2});
    const Network<float> drop_net(spec);
    const auto split = dataset::split_indices(data.size(), 0.25, 3);
    auto cfg = quick_config(3);
    cfg.augment_flip = true;
    const auto a = train(drop_net, data, split, cfg);
    const auto b = train(drop_net, data, split, cfg);
    CHECK(a.weights == b.weights);
    CHECK(serialize_weights(a.weights) == serialize_weights(b.weights));
    cfg.seed = 6;
    CHECK(!(train(drop_net, data, split, cfg).weights == a.weights));
}

TEST_CASE("trainer config validation and empty split") {
    TrainerConfig cfg;
    CHECK_NOTHROW(cfg.validate());
    cfg.epochs = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = {};
    cfg.learning_rate = 0.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    const Network<float> net(tiny_spec());
    TrainingSet data(8, 8);
    data.add(sim::ImageFrame(8, 8), 0.0, 0.0);
    CHECK_THROWS_AS(train(net, data, dataset::Split{}, quick_config(1)), ConfigError);
}

TEST_CASE("divergence is reported with the epoch") {
    const Network<float> net(tiny_spec());
    TrainingSet data(8, 8);
    for (int i = 0; i < 32; ++i) data.add(sim::ImageFrame(8, 8, {255, 255, 255}), 1.0, 1.0);
    auto cfg = quick_config(5);
    cfg.optimizer = OptimizerKind::sgd;
    cfg.learning_rate = 1e30;
    try {
        train(net, data, dataset::split_indices(data.size(), 0.25, 1), cfg);
        FAIL("expected divergence");
    } catch (const NumericError& e) {
        CHECK(std::string(e.what()).find("epoch") != std::string::npos);
    }
}

TEST_CASE("history csv columns") {
    TrainingHistory h;
    h.epochs.push_back({1, 0.5, 0.25, 0.2, 1.5});
    std::ostringstream os;
    h.write_csv(os);
    CHECK(os.str().rfind("epoch,train_mse,val_mse,seconds\n1,", 0) == 0);
}

TEST_CASE("weights round trip, fingerprint and checksum") {
    testutil::TempDir dir;
    const Network<float> net(tiny_spec());
    const auto w = net.initialize(3);
    save_weights(w, dir / "w.pswt");
    CHECK(load_weights(dir / "w.pswt", net) == w);
    CHECK(deserialize_weights<float>(serialize_weights(w)) == w);

    const Network<float> other(tiny_spec(9, 8));
    CHECK_THROWS_AS(load_weights(dir / "w.pswt", other), FingerprintMismatch);

    auto bytes = serialize_weights(w);
    bytes[bytes.size() / 2] ^= 0x01;
    CHECK_THROWS_AS(deserialize_weights<float>(bytes), CorruptDataError);
    {
        std::ofstream out(dir / "bad.pswt", std::ios::binary);
        out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    }
    CHECK_THROWS_AS(load_weights(dir / "bad.pswt", net), CorruptDataError);

    const Network<double> net64(tiny_spec());
    const auto w64 = net64.initialize(3);
    CHECK(deserialize_weights<double>(serialize_weights(w64)) == w64);
}
