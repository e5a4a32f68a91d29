#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "fxlab/adam.hpp"
#include "fxlab/checkpoint.hpp"
#include "fxlab/error.hpp"
#include "fxlab/losses.hpp"
#include "fxlab/network.hpp"
#include "gradcheck.hpp"

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>

using namespace fxlab;
namespace fs = std::filesystem;

namespace {

ErrorKind kind_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("no fxlab::Error thrown");
    return ErrorKind::Io;
}

Tensor random_features(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<float> g(0.0f, 1.0f);
    Tensor x({n, 1, 87, 128});
    for (auto& v : x.values()) v = g(rng);
    return x;
}

bool same_bits(const Tensor& a, const Tensor& b) {
    return a.shape() == b.shape() && std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0;
}

}  // namespace

TEST_CASE("conv2d on a hand-worked example") {
    Conv2d<double> conv(1, 1, 2);
    conv.weight = BasicTensor<double>({1, 4}, std::vector<double>{1, 0, 0, -1});
    conv.bias = BasicTensor<double>({1}, std::vector<double>{0.5});
    const BasicTensor<double> x({1, 1, 3, 3}, std::vector<double>{1, 2, 3, 4, 5, 6, 7, 8, 9});
    const auto y = conv.forward(x);
    REQUIRE(y.shape() == Shape{1, 1, 2, 2});
    // top-left minus bottom-right of each 2x2 window: always -4, plus bias
    for (double v : y.values()) CHECK(v == -3.5);

    Conv2d<double> two(2, 1, 1);
    two.weight = BasicTensor<double>({1, 2}, std::vector<double>{2, 3});
    const BasicTensor<double> xx({1, 2, 1, 2}, std::vector<double>{1, 2, 10, 20});
    const auto yy = two.forward(xx);
    CHECK(yy[0] == 32.0);
    CHECK(yy[1] == 64.0);

    CHECK_THROWS_AS(conv.forward(BasicTensor<double>({1, 2, 3, 3})), Error);
}

TEST_CASE("dense and maxpool on small examples") {
    Dense<double> fc(2, 1);
    fc.weight = BasicTensor<double>({1, 2}, std::vector<double>{1, -2});
    fc.bias = BasicTensor<double>({1}, std::vector<double>{0.25});
    const auto y = fc.forward(BasicTensor<double>({2, 2}, std::vector<double>{3, 1, 0, 1}));
    CHECK(y[0] == 1.25);
    CHECK(y[1] == -1.75);

    MaxPool2<double> pool;
    const BasicTensor<double> x({1, 1, 3, 5}, std::vector<double>{1, 5, 2, 0, 9, 3, 4, 8, 1, 9, 9, 9, 9, 9, 9});
    const auto p = pool.forward(x);
    REQUIRE(p.shape() == Shape{1, 1, 1, 2});
    CHECK(p[0] == 5.0);
    CHECK(p[1] == 8.0);
    const auto dx = pool.backward(BasicTensor<double>({1, 1, 1, 2}, std::vector<double>{1, 2}));
    CHECK(dx[1] == 1.0);
    CHECK(dx[7] == 2.0);
    CHECK(dx[4] == 0.0);
    CHECK(dx[14] == 0.0);
}

TEST_CASE("shape chain reaches 6264") {
    for (Variant v : {Variant::FxNet, Variant::SetNet, Variant::MultiNet, Variant::SetNetCond}) {
        Network net({v}, 1);
        CHECK(net.flat_width() == 6264);
        const auto& c = net.shape_chain();
        REQUIRE(c.size() >= 9);
        CHECK(c[0] == Shape{1, 87, 128});
        CHECK(c[1] == Shape{6, 83, 124});
        CHECK(c[2] == Shape{6, 41, 62});
        CHECK(c[3] == Shape{12, 37, 58});
        CHECK(c[4] == Shape{12, 18, 29});
        CHECK(c[5] == Shape{6264});
        CHECK(c[6] == Shape{120});
        CHECK(c[7] == Shape{60});
    }
    Network fx({Variant::FxNet}, 1);
    const auto out = fx.forward(random_features(3, 1));
    CHECK(out.logits.shape() == Shape{3, 13});
    CHECK(out.settings.empty());
    Network multi({Variant::MultiNet}, 1);
    const auto m = multi.forward(random_features(3, 1));
    CHECK(m.logits.shape() == Shape{3, 13});
    CHECK(m.settings.shape() == Shape{3, 2});
    for (float s : m.settings.values()) CHECK(std::abs(s) <= 1.0f);
    CHECK(kind_of([&] { fx.forward(Tensor({3, 1, 86, 128})); }) == ErrorKind::Shape);
}

TEST_CASE("batchnorm statistics") {
    std::mt19937_64 rng(3);
    BatchNorm<double> bn(2);
    auto x = fxgrad::random_tensor({8, 2}, rng, 1.0, 5.0);
    const auto y = bn.forward(x, true);
    for (std::size_t c = 0; c < 2; ++c) {
        double m = 0.0, v = 0.0, xm = 0.0, xv = 0.0;
        for (std::size_t i = 0; i < 8; ++i) m += y[i * 2 + c] / 8.0, xm += x[i * 2 + c] / 8.0;
        for (std::size_t i = 0; i < 8; ++i)
            v += (y[i * 2 + c] - m) * (y[i * 2 + c] - m) / 8.0, xv += (x[i * 2 + c] - xm) * (x[i * 2 + c] - xm);
        CHECK(std::abs(m) < 1e-12);
        CHECK(v == doctest::Approx(1.0).epsilon(1e-4));
        CHECK(bn.running_mean[c] == doctest::Approx(0.1 * xm));
        CHECK(bn.running_var[c] == doctest::Approx(0.9 + 0.1 * xv / 7.0));
    }
    // eval mode uses the running statistics
    const auto e = bn.forward(x, false);
    CHECK(e[0] == doctest::Approx((x[0] - bn.running_mean[0]) / std::sqrt(bn.running_var[0] + 1e-5)));
}

TEST_CASE("layer gradients match finite differences") {
    for (std::uint64_t seed : {1, 2, 3})
        for (const auto& c : fxgrad::check_layers(seed)) CHECK_MESSAGE(c.ok(), c.name, " ", c.rel_error, " unsmooth ", c.unsmooth, "/", c.probed);
}

TEST_CASE("toy network gradients match finite differences") {
    for (Variant v : {Variant::FxNet, Variant::SetNet, Variant::MultiNet, Variant::SetNetCond})
        for (const auto& c : fxgrad::check_network(v, 5)) CHECK_MESSAGE(c.ok(), c.name, " ", c.rel_error, " unsmooth ", c.unsmooth, "/", c.probed);
}

TEST_CASE("backward before forward") {
    Relu<float> relu;
    CHECK(kind_of([&] { relu.backward(Tensor({2})); }) == ErrorKind::State);
    Dense<float> fc(2, 2);
    CHECK(kind_of([&] { fc.backward(Tensor({1, 2})); }) == ErrorKind::State);
    Network net({Variant::FxNet}, 1);
    CHECK(kind_of([&] { net.backward({}); }) == ErrorKind::State);
}

TEST_CASE("cross entropy and mse") {
    const Tensor uniform({4, 13}, 0.3f);
    const std::vector<int> labels = {0, 5, 12, 7};
    CHECK(std::abs(cross_entropy(uniform, labels).value - std::log(13.0)) < 1e-6);

    const Tensor logits({1, 3}, std::vector<float>{1.0f, 2.0f, 3.0f});
    const std::vector<int> two = {2};
    const double lse = std::log(std::exp(1.0) + std::exp(2.0) + std::exp(3.0));
    const auto ce = cross_entropy(logits, two);
    CHECK(ce.value == doctest::Approx(lse - 3.0));
    CHECK(ce.grad[2] == doctest::Approx(std::exp(3.0 - lse) - 1.0));

    const std::vector<int> bad = {13};
    CHECK(kind_of([&] { cross_entropy(Tensor({1, 13}), bad); }) == ErrorKind::Domain);
    CHECK(kind_of([&] { cross_entropy(Tensor({2, 13}), bad); }) == ErrorKind::Shape);

    const Tensor p({2, 2}, std::vector<float>{0.5f, -1.0f, 0.0f, 1.0f});
    const Tensor t({2, 2}, std::vector<float>{0.0f, -1.0f, 0.0f, 0.0f});
    const auto m = mse(p, t);
    CHECK(m.value == doctest::Approx(0.3125));
    CHECK(m.grad[0] == doctest::Approx(0.25));
    CHECK(m.grad[3] == doctest::Approx(0.5));
    CHECK(kind_of([&] { mse(p, Tensor({2, 1})); }) == ErrorKind::Shape);

    const std::vector<float> row = {1000.0f, 1000.0f};
    const auto sm = softmax_row(row);
    CHECK(sm[0] == doctest::Approx(0.5));
}

TEST_CASE("adam update") {
    std::vector<double> w = {1.0, -2.0, 0.5};
    const std::vector<double> g = {0.3, -4.0, 0.0};
    AdamMoments mom;
    AdamConfig cfg;
    adam_update<double>(w, g, mom, 1, cfg);
    // First bias-corrected step is lr * g / (|g| + eps).
    CHECK(w[0] == doctest::Approx(1.0 - 0.001).epsilon(1e-9));
    CHECK(w[1] == doctest::Approx(-2.0 + 0.001).epsilon(1e-9));
    CHECK(w[2] == 0.5);
    CHECK(mom.m[0] == doctest::Approx(0.03));
    CHECK(mom.v[1] == doctest::Approx(0.016));

    // Second step with the same gradient keeps the same size.
    adam_update<double>(w, g, mom, 2, cfg);
    CHECK(w[0] == doctest::Approx(1.0 - 0.002).epsilon(1e-9));

    // Minimizes a quadratic.
    BasicTensor<double> p({1}, std::vector<double>{3.0});
    Adam<double> opt({{"p", &p}}, AdamConfig{0.1});
    for (int i = 0; i < 500; ++i) {
        p.zero_grad();
        p.grad()[0] = 2.0 * (p[0] - 1.0);
        opt.step();
    }
    CHECK(p[0] == doctest::Approx(1.0).epsilon(1e-3));
    CHECK(opt.timestep() == 500);
}

TEST_CASE("SetNetCond conditioning") {
    Network net({Variant::SetNetCond}, 4);
    const auto x = random_features(2, 8);
    CHECK(kind_of([&] { net.forward(x); }) == ErrorKind::Conditioning);
    const std::vector<int> one = {1};
    CHECK(kind_of([&] { net.forward(x, one); }) == ErrorKind::Conditioning);
    const std::vector<int> bad = {0, 13};
    CHECK(kind_of([&] { net.forward(x, bad); }) == ErrorKind::Conditioning);

    const std::vector<int> a = {2, 2}, b = {9, 9};
    const auto ya = net.forward(x, a), yb = net.forward(x, b);
    CHECK_FALSE(same_bits(ya.settings, yb.settings));
    CHECK(ya.logits.empty());
}

TEST_CASE("embedding reaches the output") {
    NetworkConfig cfg;
    cfg.variant = Variant::SetNetCond;
    cfg.input_height = 16;
    cfg.input_width = 16;
    BasicNetwork<double> net(cfg, 2);
    std::mt19937_64 rng(2);
    const auto x = fxgrad::random_tensor({4, 1, 16, 16}, rng);
    const std::vector<int> ids = {0, 3, 3, 7};
    net.zero_grad();
    const auto out = net.forward(x, ids, true);
    Outputs<double> g;
    g.settings = BasicTensor<double>(out.settings.shape(), 1.0);
    net.backward(g);
    double norm = 0.0;
    for (auto& p : net.parameters())
        if (p.name.find("embedding") != std::string::npos)
            for (double v : p.tensor->grad()) norm += v * v;
    CHECK(norm > 0.0);
}

TEST_CASE("checkpoint round trip") {
    const auto dir = fs::temp_directory_path() / "fxlab_neural_ckpt";
    fs::remove_all(dir);
    fs::create_directories(dir);
    for (Variant v : {Variant::MultiNet, Variant::SetNetCond}) {
        Network net({v}, 21);
        // move the running statistics off their defaults
        const std::vector<int> ids = {1, 4, 7};
        net.forward(random_features(3, 2), ids, true);
        CheckpointMeta meta;
        meta.config = net.config();
        meta.seed = 21;
        meta.feature_checksum = "abc123";
        meta.train_subset = "mono-discrete";
        meta.standardizer.mean.assign(128, 0.25f);
        meta.standardizer.stddev.assign(128, 2.0f);
        meta.best_epoch = 7;
        meta.best_metric = 81.5;
        save_checkpoint(dir / "m.ckpt", net, meta);
        auto loaded = load_checkpoint(dir / "m.ckpt");
        CHECK(loaded.meta.config.variant == v);
        CHECK(loaded.meta.seed == 21);
        CHECK(loaded.meta.feature_checksum == "abc123");
        CHECK(loaded.meta.train_subset == "mono-discrete");
        CHECK(loaded.meta.standardizer.mean == meta.standardizer.mean);
        CHECK(loaded.meta.best_epoch == 7);
        CHECK(loaded.meta.best_metric == 81.5);
        const auto x = random_features(5, 3);
        const std::vector<int> five = {0, 1, 2, 11, 12};
        const auto a = net.forward(x, five), b = loaded.net->forward(x, five);
        CHECK(same_bits(a.logits, b.logits));
        CHECK(same_bits(a.settings, b.settings));
    }
    std::ofstream(dir / "junk.ckpt") << "NOTACKPT and more bytes";
    CHECK(kind_of([&] { load_checkpoint(dir / "junk.ckpt"); }) == ErrorKind::Io);
    CHECK(kind_of([&] { load_checkpoint(dir / "missing.ckpt"); }) == ErrorKind::Io);
    {
        Network net({Variant::FxNet}, 1);
        save_checkpoint(dir / "t.ckpt", net, CheckpointMeta{});
        const auto size = fs::file_size(dir / "t.ckpt");
        fs::resize_file(dir / "t.ckpt", size - 10);
        CHECK(kind_of([&] { load_checkpoint(dir / "t.ckpt"); }) == ErrorKind::Io);
    }
    fs::remove_all(dir);
}

TEST_CASE("standardizer") {
    Standardizer s;
    s.mean = {1.0f, 2.0f};
    s.stddev = {2.0f, 0.5f};
    std::vector<float> m = {3.0f, 2.0f, 1.0f, 3.0f};
    s.apply(m, 2);
    CHECK(m == std::vector<float>{1.0f, 0.0f, 0.0f, 2.0f});
    std::vector<float> wrong(3);
    CHECK(kind_of([&] { s.apply(wrong, 3); }) == ErrorKind::Shape);
}
