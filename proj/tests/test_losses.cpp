#include <doctest.h>

#include <cmath>

#include "ftdr/losses.hpp"
#include "oracles.hpp"

using namespace ftdr;
using namespace ftdr::loss;

namespace {
Image random_image(int h, int w, uint64_t seed) {
    SplitMix64 rng(seed);
    return Tensor::uniform({h, w, 3}, rng, 0.0, 1.0);
}
}  // namespace

TEST_CASE("feature extractor: determinism, shapes, halving") {
    FeatureExtractor fx1(42), fx2(42);
    Image img = random_image(32, 32, 1);
    auto f1 = fx1.features(img);
    auto f2 = fx2.features(img);
    REQUIRE(f1.size() == 5);
    int expect_hw = 16;
    const int channels[5] = {16, 32, 64, 128, 256};
    for (size_t p = 0; p < 5; ++p) {
        CHECK(f1[p].shape() == std::vector<int>({1, channels[p], expect_hw, expect_hw}));
        for (int64_t i = 0; i < f1[p].numel(); ++i) CHECK(f1[p][i] == f2[p][i]);  // bit-identical
        expect_hw /= 2;
    }
}

TEST_CASE("reconstruction loss: identity, masked offset, homogeneity") {
    Image gt = random_image(8, 8, 2);
    BinaryMask m({8, 8}, 0.0);
    for (int i = 20; i < 36; ++i) m[i] = 1.0;

    CHECK(reconstruction_loss(gt, gt, m).value() == doctest::Approx(0.0));

    // +0.5 inside the mask only; N_m counts elements across channels -> 0.5
    Image pred = gt.detach();
    for (int y = 0; y < 8; ++y)
        for (int x = 0; x < 8; ++x)
            if (m[y * 8 + x] == 1.0)
                for (int c = 0; c < 3; ++c) pred[(y * 8 + x) * 3 + c] = gt[(y * 8 + x) * 3 + c] + 0.5;
    CHECK(reconstruction_loss(pred, gt, m).value() == doctest::Approx(0.5));

    // homogeneity: scaling the error scales the loss
    Image pred2 = gt.detach();
    for (int64_t i = 0; i < gt.numel(); ++i) pred2[i] = gt[i] + 3.0 * (pred[i] - gt[i]);
    CHECK(reconstruction_loss(pred2, gt, m).value() == doctest::Approx(1.5));

    BinaryMask empty({8, 8}, 0.0);
    CHECK(reconstruction_loss(pred, gt, empty).value() == 0.0);
}

TEST_CASE("perceptual loss: identity, nonnegativity, triangle inequality") {
    FeatureExtractor fx(7);
    Image a = random_image(32, 32, 3), b = random_image(32, 32, 4), c = random_image(32, 32, 5);
    CHECK(perceptual_loss(a, a, fx).value() == doctest::Approx(0.0));
    double lab = perceptual_loss(a, b, fx).value();
    double lbc = perceptual_loss(b, c, fx).value();
    double lac = perceptual_loss(a, c, fx).value();
    CHECK(lab >= 0.0);
    CHECK(lac <= lab + lbc + 1e-9);
}

TEST_CASE("style loss: identity, zero-mask, PSD gram matrices") {
    FeatureExtractor fx(8);
    Image a = random_image(32, 32, 6), b = random_image(32, 32, 7);
    BinaryMask m({32, 32}, 0.0);
    for (int i = 200; i < 500; ++i) m[i] = 1.0;
    CHECK(style_loss(a, a, m, fx).value() == doctest::Approx(0.0));
    CHECK(style_loss(a, b, m, fx).value() >= 0.0);

    // Gram PSD probe through the eigen-iteration oracle on stage-2 features
    auto taps = fx.features(mul(a, reshape(m, {32, 32, 1})));
    Tensor t = taps[1];
    int C = t.shape()[1], hw = t.shape()[2] * t.shape()[3];
    Tensor flat = reshape(t, {C, hw});
    Tensor gram = matmul(flat, transpose(flat));
    auto [lmax, lmin] = oracle::symmetric_eig_bounds(gram.vec(), C);
    CHECK(lmin >= -1e-8);
    CHECK(lmax >= 0.0);
}

TEST_CASE("tv loss closed forms") {
    Image constant({8, 10, 3}, 0.6);
    CHECK(tv_loss(constant).value() == doctest::Approx(0.0));

    // unit step along the horizontal axis of a 1-channel image: loss = 1/W
    int H = 6, W = 9;
    Image step({H, W, 1});
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) step[y * W + x] = x < W / 2 ? 0.0 : 1.0;
    CHECK(tv_loss(step).value() == doctest::Approx(1.0 / W));

    // homogeneity
    Image scaled = step.detach();
    for (int64_t i = 0; i < step.numel(); ++i) scaled[i] *= 2.5;
    CHECK(tv_loss(scaled).value() == doctest::Approx(2.5 / W));
}

TEST_CASE("total loss presets hit the paper sums on unit components") {
    Tensor one = Tensor::scalar(1.0);
    double hq = total_loss(one, one, one, one, one, LossWeights::preset("celeba_hq")).value();
    CHECK(hq == doctest::Approx(251.21).epsilon(1e-12));
    double cel = total_loss(one, one, one, one, one, LossWeights::preset("celeba")).value();
    CHECK(cel == doctest::Approx(255.21).epsilon(1e-12));
    Tensor zero = Tensor::scalar(0.0);
    CHECK(total_loss(zero, zero, zero, zero, zero, LossWeights()).value() == 0.0);
    CHECK_THROWS_AS(LossWeights::preset("imagenet"), ContractError);
}

TEST_CASE("losses are differentiable w.r.t. the prediction") {
    FeatureExtractor fx(9);
    Image gt = random_image(32, 32, 10);
    Image pred = random_image(32, 32, 11);
    BinaryMask m({32, 32}, 0.0);
    for (int i = 60; i < 300; ++i) m[i] = 1.0;

    double e1 = oracle::gradcheck([&]() { return reconstruction_loss(pred, gt, m); }, {pred},
                                  1e-5, 96);
    CHECK(e1 < 1e-4);
    double e2 = oracle::gradcheck([&]() { return perceptual_loss(pred, gt, fx); }, {pred},
                                  1e-5, 48);
    CHECK(e2 < 1e-4);
    double e3 = oracle::gradcheck([&]() { return style_loss(pred, gt, m, fx); }, {pred},
                                  1e-5, 48);
    CHECK(e3 < 1e-4);
    double e4 = oracle::gradcheck([&]() { return tv_loss(pred); }, {pred}, 1e-5, 96);
    CHECK(e4 < 1e-4);
}
