#pragma once

#include <string>
#include <vector>

#include "ftdr/image.hpp"

namespace ftdr::inpaint {

// Per-landmark Gaussian-peak heatmaps, one channel per point, unit peak at
// the (rounded) landmark pixel.
struct LandmarkMap {
    Tensor heatmap;  // (K, H, W), channels-first
    int points() const { return heatmap.shape()[0]; }
};

// Providers: a text file of K lines "x y" (pixel coordinates), or a mean-face
// template scaled to the frame when no file is available.
std::vector<std::pair<double, double>> load_landmark_points(const std::string& path);
std::vector<std::pair<double, double>> template_landmark_points();  // normalized [0,1]^2

LandmarkMap render_landmarks(const std::vector<std::pair<double, double>>& points_px, int H,
                             int W, double sigma = 2.0);
LandmarkMap landmarks_from_file(const std::string& path, int H, int W, double sigma = 2.0);
LandmarkMap template_landmarks(int H, int W, double sigma = 2.0);

// (K, H, W) -> (1, H, W) by max over channels: a single-channel conditioning
// map for small desk-scale models.
Tensor collapse_landmarks(const LandmarkMap& lm);

}  // namespace ftdr::inpaint
