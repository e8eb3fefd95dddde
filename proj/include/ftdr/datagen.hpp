#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ftdr/image.hpp"
#include "ftdr/rng.hpp"

namespace ftdr::data {

// Single all-ones block of size (H/2, W/2) at a uniform random position:
// a quarter of the frame area, matching the 128x128-in-256x256 protocol.
BinaryMask gen_block_mask(int H, int W, uint64_t seed);

// Brush-walk parameters for free-form strokes. Lengths are in pixels at a
// 256-px frame and scale with the frame.
struct FreeformParams {
    int min_vertices = 4;
    int max_vertices = 12;
    double max_turn = 2.0 * M_PI / 5.0;  // full width of the turning-angle window
    double len_lo = 10.0;
    double len_hi = 40.0;
    double radius_lo = 5.0;
    double radius_hi = 20.0;
    double max_area = 0.6;  // rejection-resample above this fraction
};

BinaryMask gen_freeform_mask(int H, int W, uint64_t seed, int strokes,
                             const FreeformParams& params = {});

// Area-interval index 0..5 for fractions [0,0.1), ..., [0.5,0.6]. Fractions
// above 0.6 are outside the evaluation protocol.
int classify_area(const BinaryMask& mask);

// Eq-style blends. Both keep unmasked pixels bit-identical to the input and
// are differentiable through the tensor engine (the joint training stage
// feeds a soft predicted mask through binary_masked).
Image blend(const Image& gt, const BinaryMask& mask, const Image& fill);
// Masked pixels become 1 (white).
Image binary_masked(const Image& corrupted, const Tensor& mask);

Image constant_fill(int H, int W, int C, double value);

// Independent selection of a mask source and a fill source for one sample;
// the two draws come from unrelated substreams of the sample seed.
std::pair<int, int> sample_indices(uint64_t seed, int mask_count, int fill_count);

}  // namespace ftdr::data
