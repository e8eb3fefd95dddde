#pragma once

#include <string>
#include <vector>

#include "ftdr/image.hpp"
#include "ftdr/losses.hpp"

namespace ftdr::metrics {

// 10*log10(1/MSE) over all channels, dynamic range 1. Identical images hit
// the 100 dB sentinel cap.
inline constexpr double kPsnrCap = 100.0;
double psnr(const Image& pred, const Image& gt);

// Mean local SSIM on luma: 11x11 Gaussian window (sigma 1.5), C1=(0.01)^2,
// C2=(0.03)^2. Throws when the image is smaller than the window.
double ssim(const Image& pred, const Image& gt);

// 100 * mean |prob - gt|.
double mask_mae(const Tensor& prob, const BinaryMask& gt);

// 100 * |intersection| / |union|; 100 when both masks are empty.
double mask_iou(const BinaryMask& pred, const BinaryMask& gt);

// Cosine similarity of globally pooled deepest features; 0 for a zero-norm
// feature vector.
double ics(const Image& pred, const Image& gt, const loss::FeatureExtractor& fx);

struct EvalRow {
    std::string id;
    int interval = -1;  // -1 = no mask provided
    double psnr = 0.0;
    double ssim = 0.0;
    double mae = -1.0;  // -1 = not computed
    double iou = -1.0;
    double ics = 0.0;
};

struct EvalReport {
    std::vector<EvalRow> rows;
    // Tab-separated rows plus a per-interval aggregate block.
    std::string to_tsv() const;
};

}  // namespace ftdr::metrics
