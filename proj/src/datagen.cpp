#include "ftdr/datagen.hpp"

#include <algorithm>
#include <cmath>

namespace ftdr::data {

BinaryMask gen_block_mask(int H, int W, uint64_t seed) {
    int bh = H / 2, bw = W / 2;
    if (bh < 1 || bw < 1) throw ContractError("frame too small for a block mask");
    SplitMix64 rng(seed);
    int y0 = rng.uniform_int(H - bh + 1);
    int x0 = rng.uniform_int(W - bw + 1);
    BinaryMask mask({H, W}, 0.0);
    for (int y = y0; y < y0 + bh; ++y)
        for (int x = x0; x < x0 + bw; ++x) mask[static_cast<int64_t>(y) * W + x] = 1.0;
    return mask;
}

namespace {

void stamp_capsule(BinaryMask& mask, double x0, double y0, double x1, double y1, double r) {
    int H = mask.shape()[0], W = mask.shape()[1];
    int ylo = std::max(0, static_cast<int>(std::floor(std::min(y0, y1) - r)));
    int yhi = std::min(H - 1, static_cast<int>(std::ceil(std::max(y0, y1) + r)));
    int xlo = std::max(0, static_cast<int>(std::floor(std::min(x0, x1) - r)));
    int xhi = std::min(W - 1, static_cast<int>(std::ceil(std::max(x0, x1) + r)));
    double dx = x1 - x0, dy = y1 - y0;
    double len2 = dx * dx + dy * dy;
    for (int y = ylo; y <= yhi; ++y)
        for (int x = xlo; x <= xhi; ++x) {
            double t = len2 > 0.0 ? ((x - x0) * dx + (y - y0) * dy) / len2 : 0.0;
            t = std::clamp(t, 0.0, 1.0);
            double px = x0 + t * dx, py = y0 + t * dy;
            double d2 = (x - px) * (x - px) + (y - py) * (y - py);
            if (d2 <= r * r) mask[static_cast<int64_t>(y) * W + x] = 1.0;
        }
}

double area_fraction(const BinaryMask& mask) {
    double s = 0.0;
    for (int64_t i = 0; i < mask.numel(); ++i) s += mask[i];
    return s / static_cast<double>(mask.numel());
}

}  // namespace

BinaryMask gen_freeform_mask(int H, int W, uint64_t seed, int strokes,
                             const FreeformParams& params) {
    if (strokes < 1) throw ContractError("gen_freeform_mask needs strokes >= 1");
    SplitMix64 rng(seed);
    double frame_scale = std::min(H, W) / 256.0;
    for (int attempt = 0; attempt < 1000; ++attempt) {
        BinaryMask mask({H, W}, 0.0);
        for (int s = 0; s < strokes; ++s) {
            double x = rng.uniform(0.0, W - 1.0);
            double y = rng.uniform(0.0, H - 1.0);
            int vertices = params.min_vertices +
                           rng.uniform_int(params.max_vertices - params.min_vertices + 1);
            double heading = rng.uniform(0.0, 2.0 * M_PI);
            double radius = rng.uniform(params.radius_lo, params.radius_hi);
            for (int v = 0; v < vertices; ++v) {
                heading += rng.uniform(0.0, params.max_turn) - params.max_turn / 2.0;
                double len = rng.uniform(params.len_lo, params.len_hi) * frame_scale;
                double nx = std::clamp(x + len * std::cos(heading), 0.0, W - 1.0);
                double ny = std::clamp(y + len * std::sin(heading), 0.0, H - 1.0);
                stamp_capsule(mask, x, y, nx, ny, radius);
                x = nx;
                y = ny;
            }
        }
        if (area_fraction(mask) <= params.max_area) return mask;
    }
    throw ContractError("gen_freeform_mask: could not satisfy area bound");
}

int classify_area(const BinaryMask& mask) {
    double f = area_fraction(mask);
    if (f > 0.6)
        throw ContractError("mask area fraction " + std::to_string(f) +
                            " above the 60% protocol bound");
    int idx = static_cast<int>(f * 10.0);
    return std::min(idx, 5);  // 0.6 exactly falls in the closed top interval
}

Image blend(const Image& gt, const BinaryMask& mask, const Image& fill) {
    check_image(gt, "blend gt");
    check_image(fill, "blend fill");
    if (mask.rank() != 2 || mask.shape()[0] != gt.shape()[0] || mask.shape()[1] != gt.shape()[1])
        throw ShapeError("blend mask must match image height/width");
    if (fill.shape() != gt.shape()) throw ShapeError("blend fill must match image shape");
    Tensor m3 = reshape(mask, {mask.shape()[0], mask.shape()[1], 1});
    Tensor keep = add_scalar(scale(m3, -1.0), 1.0);  // 1 - M
    return add(mul(gt, keep), mul(fill, m3));
}

Image binary_masked(const Image& corrupted, const Tensor& mask) {
    check_image(corrupted, "binary_masked image");
    if (mask.rank() != 2 || mask.shape()[0] != corrupted.shape()[0] ||
        mask.shape()[1] != corrupted.shape()[1])
        throw ShapeError("binary_masked mask must match image height/width");
    Tensor m3 = reshape(mask, {mask.shape()[0], mask.shape()[1], 1});
    Tensor keep = add_scalar(scale(m3, -1.0), 1.0);
    return add(mul(corrupted, keep), mul(Tensor::ones(corrupted.shape()), m3));
}

Image constant_fill(int H, int W, int C, double value) { return Image({H, W, C}, value); }

std::pair<int, int> sample_indices(uint64_t seed, int mask_count, int fill_count) {
    SplitMix64 base(seed);
    SplitMix64 mask_stream = base.fork(0);
    SplitMix64 fill_stream = base.fork(1);
    int mi = mask_count > 0 ? mask_stream.uniform_int(mask_count) : 0;
    int fi = fill_count > 0 ? fill_stream.uniform_int(fill_count) : 0;
    return {mi, fi};
}

}  // namespace ftdr::data
