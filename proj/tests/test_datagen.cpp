#include <doctest.h>

#include <cmath>

#include "ftdr/datagen.hpp"

using namespace ftdr;
using namespace ftdr::data;

namespace {
double area_fraction(const BinaryMask& m) {
    double s = 0.0;
    for (int64_t i = 0; i < m.numel(); ++i) s += m[i];
    return s / static_cast<double>(m.numel());
}
}  // namespace

TEST_CASE("block mask covers exactly a quarter of the frame") {
    for (int size : {256, 64}) {
        BinaryMask m = gen_block_mask(size, size, 3);
        CHECK(area_fraction(m) == doctest::Approx(0.25));
        for (int64_t i = 0; i < m.numel(); ++i) CHECK((m[i] == 0.0 || m[i] == 1.0));
    }
}

TEST_CASE("block mask is deterministic and a connected rectangle") {
    BinaryMask a = gen_block_mask(64, 64, 42);
    BinaryMask b = gen_block_mask(64, 64, 42);
    for (int64_t i = 0; i < a.numel(); ++i) CHECK(a[i] == b[i]);

    // rectangle: row extents identical for all occupied rows
    int first_col = -1, last_col = -1, rows = 0;
    for (int y = 0; y < 64; ++y) {
        int lo = -1, hi = -1;
        for (int x = 0; x < 64; ++x)
            if (a[y * 64 + x] == 1.0) {
                if (lo < 0) lo = x;
                hi = x;
            }
        if (lo < 0) continue;
        ++rows;
        if (first_col < 0) {
            first_col = lo;
            last_col = hi;
        }
        CHECK(lo == first_col);
        CHECK(hi == last_col);
        // contiguous fill inside [lo, hi]
        for (int x = lo; x <= hi; ++x) CHECK(a[y * 64 + x] == 1.0);
    }
    CHECK(rows == 32);
    CHECK(last_col - first_col + 1 == 32);
}

TEST_CASE("freeform masks: deterministic, binary, area-bounded") {
    BinaryMask a = gen_freeform_mask(64, 64, 9, 2);
    BinaryMask b = gen_freeform_mask(64, 64, 9, 2);
    for (int64_t i = 0; i < a.numel(); ++i) {
        CHECK(a[i] == b[i]);
        CHECK((a[i] == 0.0 || a[i] == 1.0));
    }
    for (uint64_t seed = 0; seed < 200; ++seed) {
        BinaryMask m = gen_freeform_mask(64, 64, seed, 1 + static_cast<int>(seed % 3));
        double f = area_fraction(m);
        CHECK(f > 0.0);
        CHECK(f <= 0.6);
    }
}

TEST_CASE("classify_area bins per the six-interval protocol") {
    BinaryMask zero({10, 10}, 0.0);
    CHECK(classify_area(zero) == 0);

    BinaryMask quarter = gen_block_mask(64, 64, 1);
    CHECK(classify_area(quarter) == 2);  // 0.25 in [0.2, 0.3)

    BinaryMask m({10, 10}, 0.0);
    for (int i = 0; i < 55; ++i) m[i] = 1.0;  // 0.55
    CHECK(classify_area(m) == 5);

    BinaryMask top({10, 10}, 0.0);
    for (int i = 0; i < 60; ++i) top[i] = 1.0;  // 0.60 exactly: closed top interval
    CHECK(classify_area(top) == 5);

    BinaryMask over({10, 10}, 0.0);
    for (int i = 0; i < 61; ++i) over[i] = 1.0;
    CHECK_THROWS_AS(classify_area(over), ContractError);
}

TEST_CASE("blend identities") {
    SplitMix64 rng(12);
    Image gt = Tensor::uniform({8, 8, 3}, rng, 0.0, 1.0);
    Image fill = constant_fill(8, 8, 3, 0.9);

    BinaryMask none({8, 8}, 0.0);
    Image same = blend(gt, none, fill);
    for (int64_t i = 0; i < gt.numel(); ++i) CHECK(same[i] == gt[i]);  // bit-exact

    BinaryMask all({8, 8}, 1.0);
    Image filled = blend(gt, all, fill);
    for (int64_t i = 0; i < gt.numel(); ++i) CHECK(filled[i] == 0.9);
}

TEST_CASE("blend checkerboard matches the per-pixel oracle") {
    SplitMix64 rng(13);
    Image gt = Tensor::uniform({6, 6, 3}, rng, 0.0, 1.0);
    Image fill = Tensor::uniform({6, 6, 3}, rng, 0.0, 1.0);
    BinaryMask m({6, 6});
    for (int y = 0; y < 6; ++y)
        for (int x = 0; x < 6; ++x) m[y * 6 + x] = (x + y) % 2;
    Image out = blend(gt, m, fill);
    for (int y = 0; y < 6; ++y)
        for (int x = 0; x < 6; ++x)
            for (int c = 0; c < 3; ++c) {
                int64_t i = (static_cast<int64_t>(y) * 6 + x) * 3 + c;
                double expect = m[y * 6 + x] == 1.0 ? fill[i] : gt[i];
                CHECK(out[i] == expect);
            }
}

TEST_CASE("binary_masked whitens masked pixels") {
    SplitMix64 rng(14);
    Image img = Tensor::uniform({5, 5, 3}, rng, 0.0, 1.0);

    BinaryMask none({5, 5}, 0.0);
    Image same = binary_masked(img, none);
    for (int64_t i = 0; i < img.numel(); ++i) CHECK(same[i] == img[i]);

    BinaryMask all({5, 5}, 1.0);
    Image white = binary_masked(img, all);
    for (int64_t i = 0; i < img.numel(); ++i) CHECK(white[i] == 1.0);

    BinaryMask m({5, 5}, 0.0);
    m[7] = m[13] = 1.0;
    Image mixed = binary_masked(img, m);
    for (int y = 0; y < 5; ++y)
        for (int x = 0; x < 5; ++x)
            for (int c = 0; c < 3; ++c) {
                int64_t i = (static_cast<int64_t>(y) * 5 + x) * 3 + c;
                double expect = m[y * 5 + x] == 1.0 ? 1.0 : img[i];
                CHECK(mixed[i] == expect);
            }
}

TEST_CASE("mask and fill selections are statistically independent") {
    const int n = 1000, masks = 7, fills = 5;
    double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
    for (int s = 0; s < n; ++s) {
        auto [mi, fi] = sample_indices(static_cast<uint64_t>(s), masks, fills);
        CHECK(mi >= 0);
        CHECK(mi < masks);
        CHECK(fi >= 0);
        CHECK(fi < fills);
        sx += mi;
        sy += fi;
        sxx += static_cast<double>(mi) * mi;
        syy += static_cast<double>(fi) * fi;
        sxy += static_cast<double>(mi) * fi;
    }
    double cov = sxy / n - (sx / n) * (sy / n);
    double vx = sxx / n - (sx / n) * (sx / n);
    double vy = syy / n - (sy / n) * (sy / n);
    double corr = cov / std::sqrt(vx * vy);
    CHECK(std::fabs(corr) < 0.1);
}
