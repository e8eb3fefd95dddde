#include <doctest.h>

#include <cmath>

#include "ftdr/frequency.hpp"
#include "oracles.hpp"

using namespace ftdr;
using namespace ftdr::freq;

namespace {
Tensor random_channel(int h, int w, uint64_t seed) {
    SplitMix64 rng(seed);
    return Tensor::uniform({h, w}, rng, 0.0, 1.0);
}
double energy(const Tensor& t) {
    double e = 0.0;
    for (int64_t i = 0; i < t.numel(); ++i) e += t[i] * t[i];
    return e;
}
}  // namespace

TEST_CASE("dct2 of a constant image concentrates at DC") {
    const double c = 0.37;
    Tensor x({12, 9}, c);
    FrequencySpectrum s = dct2(x);
    CHECK(s.coeffs[0] == doctest::Approx(c * std::sqrt(12.0 * 9.0)).epsilon(1e-12));
    for (int64_t i = 1; i < s.coeffs.numel(); ++i) CHECK(std::fabs(s.coeffs[i]) < 1e-10);
}

TEST_CASE("dct2 matches the naive double-sum reference") {
    for (int n : {8, 16}) {
        Tensor x = random_channel(n, n, 100 + static_cast<uint64_t>(n));
        FrequencySpectrum s = dct2(x);
        auto ref = oracle::naive_dct2(x.vec(), n, n);
        double worst = 0.0;
        for (int64_t i = 0; i < s.coeffs.numel(); ++i)
            worst = std::max(worst, std::fabs(s.coeffs[i] - ref[static_cast<size_t>(i)]));
        CHECK(worst < 1e-10);
        Tensor back = idct2(s);
        auto ref_back = oracle::naive_idct2(ref, n, n);
        for (int64_t i = 0; i < back.numel(); ++i)
            CHECK(back[i] == doctest::Approx(ref_back[static_cast<size_t>(i)]).epsilon(1e-10));
    }
}

TEST_CASE("idct2 inverts dct2") {
    Tensor x = random_channel(32, 32, 7);
    Tensor back = idct2(dct2(x));
    double worst = 0.0;
    for (int64_t i = 0; i < x.numel(); ++i) worst = std::max(worst, std::fabs(back[i] - x[i]));
    CHECK(worst < 1e-9);

    // other direction: dct2(idct2(s)) == s
    FrequencySpectrum s{random_channel(24, 16, 8)};
    FrequencySpectrum s2 = dct2(idct2(s));
    for (int64_t i = 0; i < s.coeffs.numel(); ++i)
        CHECK(std::fabs(s2.coeffs[i] - s.coeffs[i]) < 1e-9);
}

TEST_CASE("Parseval energy preservation") {
    Tensor x = random_channel(33, 47, 9);
    FrequencySpectrum s = dct2(x);
    double ex = energy(x), es = energy(s.coeffs);
    CHECK(std::fabs(ex - es) / ex < 1e-8);
}

TEST_CASE("idct2 of a pure DC spectrum is constant") {
    int H = 10, W = 14;
    Tensor c({H, W}, 0.0);
    c[0] = std::sqrt(static_cast<double>(H) * W);
    Tensor img = idct2({c});
    for (int64_t i = 0; i < img.numel(); ++i) CHECK(img[i] == doctest::Approx(1.0));

    Tensor z({H, W}, 0.0);
    Tensor zi = idct2({z});
    for (int64_t i = 0; i < zi.numel(); ++i) CHECK(zi[i] == 0.0);
}

TEST_CASE("high_pass removes exactly the anti-diagonal band") {
    // constant image: only (0,0) occupied, so removing just the DC leaves zero
    Tensor x({16, 16}, 0.8);
    FrequencySpectrum s = dct2(x);
    HighPassConfig only_dc{0.5 / 32.0};  // cut = 0.5: removes u+v = 0 only
    FrequencySpectrum hp = high_pass(s, only_dc);
    CHECK(energy(hp.coeffs) < 1e-18);

    // cut above the largest u+v wipes any spectrum
    Tensor r = random_channel(8, 8, 10);
    HighPassConfig all{(8.0 + 8.0 - 1.0) / 16.0};  // cut = 15 > max u+v = 14
    CHECK(energy(high_pass(dct2(r), all).coeffs) == 0.0);

    CHECK_THROWS_AS(high_pass(s, HighPassConfig{0.0}), ContractError);
    CHECK_THROWS_AS(high_pass(s, HighPassConfig{1.0}), ContractError);
}

TEST_CASE("checkerboard keeps its Nyquist corner under high_pass") {
    int n = 16;
    Tensor x({n, n});
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) x[i * n + j] = ((i + j) % 2 == 0) ? 1.0 : -1.0;
    auto ref = oracle::naive_dct2(x.vec(), n, n);
    double corner_ref = ref[static_cast<size_t>(n) * n - 1];
    CHECK(std::fabs(corner_ref) > 1.0);  // energy concentrates at the highest (u,v)
    FrequencySpectrum hp = high_pass(dct2(x), HighPassConfig{0.9});
    CHECK(hp.coeffs[static_cast<int64_t>(n) * n - 1] ==
          doctest::Approx(corner_ref).epsilon(1e-12));
}

TEST_CASE("frequency_representation of a constant image is zero") {
    Tensor img({20, 20, 3}, 0.42);
    Tensor f = frequency_representation(img);
    REQUIRE(f.shape() == std::vector<int>({20, 20, 1}));
    for (int64_t i = 0; i < f.numel(); ++i) CHECK(std::fabs(f[i]) < 1e-9);
}

TEST_CASE("frequency_representation is linear and deterministic") {
    SplitMix64 rng(77);
    Tensor img = Tensor::uniform({16, 24, 3}, rng, 0.0, 1.0);
    Tensor f1 = frequency_representation(img);
    Tensor f2 = frequency_representation(img);
    for (int64_t i = 0; i < f1.numel(); ++i) CHECK(f1[i] == f2[i]);  // bit-identical

    double a = 2.5;
    Tensor scaled = img.detach();
    for (int64_t i = 0; i < scaled.numel(); ++i) scaled[i] *= a;
    Tensor fa = frequency_representation(scaled);
    for (int64_t i = 0; i < f1.numel(); ++i)
        CHECK(std::fabs(fa[i] - a * f1[i]) < 1e-9);
}

TEST_CASE("constant-filled block produces boundary-concentrated response") {
    // 64x64 scene with texture, a 32x32 constant block pasted in the middle.
    int n = 64;
    SplitMix64 rng(5);
    Tensor img({n, n});
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            img[i * n + j] = 0.5 + 0.2 * std::sin(0.7 * i) * std::cos(0.9 * j) +
                             0.1 * rng.uniform(-1.0, 1.0);
    int b0 = 16, b1 = 48;
    for (int i = b0; i < b1; ++i)
        for (int j = b0; j < b1; ++j) img[i * n + j] = 0.3;

    // reference pipeline: naive DCT -> band cut -> naive IDCT
    auto spec = oracle::naive_dct2(img.vec(), n, n);
    double cut = 0.08 * (n + n);
    for (int u = 0; u < n; ++u)
        for (int v = 0; v < n; ++v)
            if (u + v < cut) spec[static_cast<size_t>(u) * n + v] = 0.0;
    auto fref = oracle::naive_idct2(spec, n, n);

    auto region_mean = [&](const std::vector<double>& f, bool boundary) {
        double acc = 0.0;
        int cnt = 0;
        for (int i = b0; i < b1; ++i)
            for (int j = b0; j < b1; ++j) {
                int d = std::min(std::min(i - b0, b1 - 1 - i), std::min(j - b0, b1 - 1 - j));
                bool on_boundary = d < 4;
                if (on_boundary == boundary) {
                    acc += std::fabs(f[static_cast<size_t>(i) * n + j]);
                    ++cnt;
                }
            }
        return acc / cnt;
    };
    CHECK(region_mean(fref, false) < region_mean(fref, true));

    // implementation agrees with the reference relation
    Tensor f = frequency_representation(reshape(img, {n, n, 1}));
    std::vector<double> fv(f.data(), f.data() + f.numel());
    CHECK(region_mean(fv, false) < region_mean(fv, true));
    for (int64_t i = 0; i < f.numel(); ++i)
        CHECK(std::fabs(f[i] - fref[static_cast<size_t>(i)]) < 1e-9);
}
