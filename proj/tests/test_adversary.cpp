#include <doctest.h>

#include <cmath>

#include "ftdr/adversary.hpp"
#include "oracles.hpp"

using namespace ftdr;
using namespace ftdr::gan;

TEST_CASE("spectral_normalize on a diagonal matrix") {
    SplitMix64 rng(50);
    Tensor w({2, 2}, {3.0, 0.0, 0.0, 1.0});
    SpectralState st = SpectralState::init(w, rng);
    Tensor wn = spectral_normalize(w, st, 50);
    CHECK(spectral_sigma(w, st, 20) == doctest::Approx(3.0).epsilon(1e-9));
    CHECK(wn[0] == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(wn[1] == doctest::Approx(0.0));
    CHECK(wn[2] == doctest::Approx(0.0));
    CHECK(wn[3] == doctest::Approx(1.0 / 3.0).epsilon(1e-9));
}

TEST_CASE("spectral_normalize leaves the identity unchanged") {
    SplitMix64 rng(51);
    Tensor w({3, 3}, 0.0);
    for (int i = 0; i < 3; ++i) w[i * 3 + i] = 1.0;
    SpectralState st = SpectralState::init(w, rng);
    Tensor wn = spectral_normalize(w, st, 50);
    for (int64_t i = 0; i < w.numel(); ++i) CHECK(wn[i] == doctest::Approx(w[i]).epsilon(1e-9));
}

TEST_CASE("spectral_normalize zero weight passes through") {
    SplitMix64 rng(52);
    Tensor w({4, 4}, 0.0);
    SpectralState st = SpectralState::init(w, rng);
    Tensor wn = spectral_normalize(w, st, 5);
    for (int64_t i = 0; i < w.numel(); ++i) CHECK(wn[i] == 0.0);
}

TEST_CASE("sigma estimate matches the W^T W power-method oracle") {
    for (uint64_t seed = 0; seed < 10; ++seed) {
        SplitMix64 rng(100 + seed);
        Tensor w = Tensor::uniform({8, 8}, rng, -1.0, 1.0);
        SpectralState st = SpectralState::init(w, rng);
        double est = spectral_sigma(w, st, 50);
        double ref = oracle::largest_singular_value(w.vec(), 8, 8, 400);
        CHECK(std::fabs(est - ref) / ref < 1e-3);

        // normalized weight has largest singular value within 1% of 1
        spectral_normalize(w, st, 50);
        Tensor wn = spectral_normalize(w, st, 1);
        double sn = oracle::largest_singular_value(wn.vec(), 8, 8, 400);
        CHECK(sn >= 0.99);
        CHECK(sn <= 1.01);
    }
}

TEST_CASE("normalized layers are 1-Lipschitz on random probes") {
    SplitMix64 rng(53);
    Tensor w = Tensor::uniform({6, 10}, rng, -2.0, 2.0);
    SpectralState st = SpectralState::init(w, rng);
    Tensor wn = spectral_normalize(w, st, 50);
    for (int probe = 0; probe < 20; ++probe) {
        Tensor x1 = Tensor::uniform({10, 1}, rng, -1.0, 1.0);
        Tensor x2 = Tensor::uniform({10, 1}, rng, -1.0, 1.0);
        Tensor d = sub(x1, x2);
        Tensor wd = matmul(reshape(wn, {6, 10}), d);
        double num = 0.0, den = 0.0;
        for (int64_t i = 0; i < wd.numel(); ++i) num += wd[i] * wd[i];
        for (int64_t i = 0; i < d.numel(); ++i) den += d[i] * d[i];
        CHECK(std::sqrt(num) <= 1.01 * std::sqrt(den));
    }
}

TEST_CASE("discriminator score-map geometry: 256 -> 30x30") {
    ParamStore ps;
    SplitMix64 rng(54);
    DiscriminatorConfig cfg;
    cfg.base_channels = 4;  // tiny channels, same geometry
    cfg.landmark_channels = 1;
    Discriminator disc(ps, cfg, rng);
    Image img({256, 256, 3}, 0.5);
    inpaint::LandmarkMap lm{Tensor({1, 256, 256}, 0.0)};
    Tensor score = disc(img, lm);
    CHECK(score.shape() == std::vector<int>({30, 30}));
}

TEST_CASE("discriminator determinism and input gradient") {
    DiscriminatorConfig cfg;
    cfg.base_channels = 8;
    cfg.landmark_channels = 1;
    ParamStore ps1, ps2;
    SplitMix64 r1(55), r2(55);
    Discriminator d1(ps1, cfg, r1), d2(ps2, cfg, r2);
    SplitMix64 rng(56);
    Image img = Tensor::uniform({64, 64, 3}, rng, 0.0, 1.0);
    inpaint::LandmarkMap lm = inpaint::template_landmarks(64, 64);
    lm = inpaint::LandmarkMap{inpaint::collapse_landmarks(lm)};
    {
        NoGradGuard ng;
        Tensor s1 = d1(img, lm);
        Tensor s2 = d2(img, lm);
        REQUIRE(s1.shape() == std::vector<int>({6, 6}));
        for (int64_t i = 0; i < s1.numel(); ++i) CHECK(s1[i] == s2[i]);
    }

    ParamStore ps3;
    SplitMix64 r3(57);
    Discriminator d3(ps3, cfg, r3);
    double err = oracle::gradcheck(
        [&]() {
            Tensor s = d3(img, lm);
            return mean(mul(s, s));
        },
        {img}, 1e-5, 32);
    CHECK(err < 1e-4);
}

TEST_CASE("lsgan losses: closed forms in both conventions") {
    Tensor fake1({4, 4}, 1.0);
    auto [g_zero, d_zero] = lsgan_losses(fake1, fake1, false);
    CHECK(g_zero.value() == doctest::Approx(0.0));

    Tensor fake0({4, 4}, 0.0);
    Tensor real1({4, 4}, 1.0);
    auto [g1, d_printed] = lsgan_losses(fake0, real1, false);
    CHECK(d_printed.value() == doctest::Approx(1.0));  // printed form: (0-1)^2 + 0
    CHECK(g1.value() == doctest::Approx(1.0));

    auto [g2, d_standard] = lsgan_losses(fake0, real1, true);
    CHECK(d_standard.value() == doctest::Approx(0.0));  // fake already at target 0

    // mean reduction: doubling the map size leaves values unchanged
    Tensor fake_big({8, 8}, 0.0);
    Tensor real_big({8, 8}, 1.0);
    auto [g3, d3] = lsgan_losses(fake_big, real_big, false);
    CHECK(g3.value() == doctest::Approx(g1.value()));
    CHECK(d3.value() == doctest::Approx(d_printed.value()));

    // nonnegativity on random scores
    SplitMix64 rng(58);
    Tensor rf = Tensor::uniform({5, 5}, rng, -2.0, 2.0);
    Tensor rr = Tensor::uniform({5, 5}, rng, -2.0, 2.0);
    auto [ga, da] = lsgan_losses(rf, rr, true);
    CHECK(ga.value() >= 0.0);
    CHECK(da.value() >= 0.0);
}
