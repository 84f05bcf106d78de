#include <cmath>

#include "doctest.h"
#include "mstnet/frame_encoder.hpp"
#include "test_util.hpp"

using namespace mstnet;
using mstnet::test::max_grad_rel_err;

namespace {

ModelConfig fe_cfg(int d_in, int c1, int c2, int fc_layers, double grad_stop_p = 0.0) {
    ModelConfig cfg;
    cfg.d_in = d_in;
    cfg.c1 = c1;
    cfg.c2 = c2;
    cfg.fc_layers = fc_layers;
    cfg.grad_stop_p = grad_stop_p;
    return cfg;
}

FeatureSequence make_seq(int t, int d, Rng& rng) {
    FeatureSequence seq;
    seq.frames = Tensor::randn({t, d}, rng, 1.0);
    seq.valid_len = t;
    return seq;
}

}  // namespace

TEST_CASE("pad_to_multiple_of_4 appends zero rows only when needed") {
    Rng rng(1);
    Tensor five = Tensor::randn({5, 3}, rng, 1.0);
    Tensor padded = pad_to_multiple_of_4(five);
    REQUIRE(padded.shape() == std::vector<int>{8, 3});
    for (size_t i = 0; i < five.size(); ++i) CHECK(padded.data()[i] == five.data()[i]);
    for (size_t i = five.size(); i < padded.size(); ++i) CHECK(padded.data()[i] == 0.0);

    Tensor eight = Tensor::randn({8, 3}, rng, 1.0);
    CHECK(pad_to_multiple_of_4(eight).impl() == eight.impl());
}

TEST_CASE("frame encoder output shape") {
    Rng rng(2);
    FrameEncoder enc(fe_cfg(8, 32, 64, 2), rng);
    FeatureSequence seq = make_seq(16, 8, rng);
    CHECK(enc.forward(seq, false, nullptr).shape() == std::vector<int>{16, 64});
    FeatureSequence bad = make_seq(16, 7, rng);
    CHECK_THROWS_AS(enc.forward(bad, false, nullptr), DimensionError);
}

TEST_CASE("fc depth 0 through 3 all construct; depth 0 passes the embed width through") {
    Rng rng(3);
    for (int fc = 0; fc <= 3; ++fc) {
        int c1 = fc == 0 ? 12 : 6;  // depth 0 has no width change, so c1 == c2
        FrameEncoder enc(fe_cfg(4, c1, 12, fc), rng);
        FeatureSequence seq = make_seq(8, 4, rng);
        CHECK(enc.forward(seq, false, nullptr).shape() == std::vector<int>{8, 12});
        CHECK(enc.parameters().size() == static_cast<size_t>(2 + 2 * fc));
    }
}

TEST_CASE("zero input with fresh (zero) biases maps to zero") {
    Rng rng(4);
    FrameEncoder enc(fe_cfg(4, 6, 6, 2), rng);
    FeatureSequence seq;
    seq.frames = Tensor::zeros({8, 4});
    seq.valid_len = 8;
    Tensor out = enc.forward(seq, false, nullptr);
    for (double v : out.data()) CHECK(v == 0.0);
}

TEST_CASE("forward values are independent of the training flag") {
    Rng rng(5);
    FrameEncoder enc(fe_cfg(4, 8, 8, 1, 0.5), rng);
    FeatureSequence seq = make_seq(12, 4, rng);
    Rng mask_rng(99);
    Tensor train_out = enc.forward(seq, true, &mask_rng);
    Tensor eval_out = enc.forward(seq, false, nullptr);
    CHECK(train_out.data() == eval_out.data());
}

TEST_CASE("gradient stop p=0: training gradients equal evaluation gradients") {
    Rng rng(6);
    FrameEncoder enc(fe_cfg(4, 6, 6, 1, 0.0), rng);
    FeatureSequence seq = make_seq(8, 4, rng);
    auto grads_of = [&](bool training) {
        Rng mask_rng(7);
        for (auto& p : enc.parameters()) p.tensor.zero_grad();
        backward(sum_all(enc.forward(seq, training, &mask_rng)));
        std::vector<std::vector<double>> out;
        for (auto& p : enc.parameters()) out.push_back(p.tensor.grad());
        return out;
    };
    CHECK(grads_of(true) == grads_of(false));
}

TEST_CASE("gradient stop p=1: embedder gradients vanish, later layers still learn") {
    Rng rng(8);
    FrameEncoder enc(fe_cfg(4, 6, 6, 1, 1.0), rng);
    FeatureSequence seq = make_seq(8, 4, rng);
    Rng mask_rng(9);
    for (auto& p : enc.parameters()) p.tensor.zero_grad();
    backward(sum_all(enc.forward(seq, true, &mask_rng)));
    for (auto& p : enc.parameters()) {
        double mag = 0.0;
        for (double g : p.tensor.grad()) mag += std::abs(g);
        if (p.name.rfind("embed", 0) == 0) {
            CHECK(mag == 0.0);
        } else if (p.name == "fc0.b") {
            CHECK(mag > 0.0);
        }
    }
}

TEST_CASE("gradient stop p=0.5 masks roughly half the frames") {
    Rng rng(10);
    ModelConfig cfg = fe_cfg(4, 16, 16, 0, 0.5);
    FrameEncoder enc(cfg, rng);
    FeatureSequence seq;
    seq.frames = Tensor::randn({1000, 4}, rng, 1.0, true);
    seq.valid_len = 1000;
    Rng mask_rng(11);
    seq.frames.zero_grad();
    backward(sum_all(enc.forward(seq, true, &mask_rng)));
    // with no fc stack each input row feeds only its own output row, so a
    // stopped frame shows up as an all-zero gradient row
    int stopped = 0;
    for (int t = 0; t < 1000; ++t) {
        double mag = 0.0;
        for (int c = 0; c < 4; ++c) mag += std::abs(seq.frames.grad()[static_cast<size_t>(t) * 4 + c]);
        if (mag == 0.0) ++stopped;
    }
    CHECK(stopped > 450);
    CHECK(stopped < 550);
}

TEST_CASE("frame encoder gradients match finite differences") {
    Rng rng(12);
    FrameEncoder enc(fe_cfg(3, 5, 4, 2), rng);
    FeatureSequence seq;
    seq.frames = Tensor::randn({6, 3}, rng, 1.0, true);
    seq.valid_len = 6;
    auto loss = [&] {
        Tensor y = enc.forward(seq, false, nullptr);
        return sum_all(mul(y, y));
    };
    CHECK(max_grad_rel_err(seq.frames, loss) < 1e-4);
    for (auto& p : enc.parameters()) CHECK(max_grad_rel_err(p.tensor, loss) < 1e-4);
}
