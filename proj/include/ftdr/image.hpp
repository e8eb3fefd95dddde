#pragma once

#include "ftdr/tensor.hpp"

namespace ftdr {

// Conventions: an Image is an (H, W, C) tensor with values in [0, 1] and
// C in {1, 3}; a BinaryMask is an (H, W) tensor valued in {0, 1} where 1
// marks corrupted pixels. Model internals work in (C, H, W).
using Image = Tensor;
using BinaryMask = Tensor;

// (H, W, C) <-> (C, H, W); differentiable.
Tensor chw(const Tensor& image);
Tensor hwc(const Tensor& t);
// (H, W, C) -> (1, C, H, W) for conv input.
Tensor nchw(const Tensor& image);

void check_image(const Tensor& image, const char* what);
// Throws ContractError when any element is outside {0, 1}.
void check_binary_mask(const Tensor& mask, const char* what);

// Nearest-neighbor resize; preserves {0,1} exactly. Works on (H,W) and (H,W,C).
Tensor nearest_resize(const Tensor& t, int out_h, int out_w);
// Bilinear resize of an (H,W,C) image (I/O path, not differentiable).
Tensor bilinear_resize(const Tensor& image, int out_h, int out_w);

}  // namespace ftdr
