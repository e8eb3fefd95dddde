#pragma once

#include "ftdr/tensor.hpp"

namespace ftdr::freq {

// Orthonormal 2-D DCT-II coefficients of one image channel.
struct FrequencySpectrum {
    Tensor coeffs;  // (H, W)
    int height() const { return coeffs.shape()[0]; }
    int width() const { return coeffs.shape()[1]; }
};

// Fraction of the low-frequency band removed by the high-pass filter:
// coefficients with u + v < alpha * (H + W) are zeroed.
struct HighPassConfig {
    double alpha = 0.08;
};

// Separable orthonormal DCT-II (rows then columns) of an (H, W) channel.
FrequencySpectrum dct2(const Tensor& image_channel);

// Exact inverse of dct2.
Tensor idct2(const FrequencySpectrum& spectrum);

FrequencySpectrum high_pass(const FrequencySpectrum& spectrum, const HighPassConfig& cfg);

// BT.601 luma of an (H, W, C) image with C in {1, 3}.
Tensor luma(const Tensor& image);

// F = idct2(high_pass(dct2(luma(image)))), returned as (H, W, 1).
Tensor frequency_representation(const Tensor& image, const HighPassConfig& cfg = {});

}  // namespace ftdr::freq
