#include "ftdr/landmarks.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace ftdr::inpaint {

std::vector<std::pair<double, double>> load_landmark_points(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw Error("cannot open landmark file: " + path);
    std::vector<std::pair<double, double>> pts;
    std::string line;
    int lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ss(line);
        double x, y;
        if (!(ss >> x >> y))
            throw Error("landmark file " + path + " line " + std::to_string(lineno) +
                        " is not 'x y'");
        pts.emplace_back(x, y);
    }
    if (pts.empty()) throw Error("landmark file has no points: " + path);
    return pts;
}

// 68-point mean-face layout on [0,1]^2, built from simple arcs: 17 jaw,
// 2x5 brows, 4+5 nose, 2x6 eyes, 12 outer lip, 8 inner lip.
std::vector<std::pair<double, double>> template_landmark_points() {
    std::vector<std::pair<double, double>> pts;
    auto arc = [&](double cx, double cy, double ax, double ay, double a0, double a1, int n) {
        for (int i = 0; i < n; ++i) {
            double t = n > 1 ? static_cast<double>(i) / (n - 1) : 0.0;
            double a = a0 + (a1 - a0) * t;
            pts.emplace_back(cx + ax * std::cos(a), cy + ay * std::sin(a));
        }
    };
    auto ellipse = [&](double cx, double cy, double ax, double ay, int n) {
        for (int i = 0; i < n; ++i) {
            double a = 2.0 * M_PI * i / n;
            pts.emplace_back(cx + ax * std::cos(a), cy + ay * std::sin(a));
        }
    };
    // image y grows downward: negative ay bends an arc toward the chin
    arc(0.5, 0.50, 0.30, -0.36, M_PI, 2.0 * M_PI, 17);    // jaw, ear to ear via chin
    arc(0.35, 0.385, 0.08, 0.025, M_PI, 2.0 * M_PI, 5);   // right brow (viewer left)
    arc(0.65, 0.385, 0.08, 0.025, M_PI, 2.0 * M_PI, 5);   // left brow
    for (int i = 0; i < 4; ++i) pts.emplace_back(0.5, 0.44 + 0.05 * i);  // nose bridge
    arc(0.5, 0.615, 0.055, -0.02, M_PI, 2.0 * M_PI, 5);   // nose base
    ellipse(0.37, 0.455, 0.05, 0.022, 6);                 // right eye
    ellipse(0.63, 0.455, 0.05, 0.022, 6);                 // left eye
    ellipse(0.5, 0.74, 0.115, 0.05, 12);                  // outer lip
    ellipse(0.5, 0.74, 0.075, 0.024, 8);                  // inner lip
    return pts;
}

LandmarkMap render_landmarks(const std::vector<std::pair<double, double>>& points_px, int H,
                             int W, double sigma) {
    int K = static_cast<int>(points_px.size());
    Tensor heat({K, H, W}, 0.0);
    for (int k = 0; k < K; ++k) {
        // peak pinned to the nearest pixel so every channel max is exactly 1
        int cx = static_cast<int>(std::lround(points_px[static_cast<size_t>(k)].first));
        int cy = static_cast<int>(std::lround(points_px[static_cast<size_t>(k)].second));
        cx = std::clamp(cx, 0, W - 1);
        cy = std::clamp(cy, 0, H - 1);
        int radius = static_cast<int>(std::ceil(4.0 * sigma));
        for (int y = std::max(0, cy - radius); y <= std::min(H - 1, cy + radius); ++y)
            for (int x = std::max(0, cx - radius); x <= std::min(W - 1, cx + radius); ++x) {
                double d2 = (x - cx) * (x - cx) + (y - cy) * (y - cy);
                heat[(static_cast<int64_t>(k) * H + y) * W + x] =
                    std::exp(-d2 / (2.0 * sigma * sigma));
            }
    }
    return {heat};
}

LandmarkMap landmarks_from_file(const std::string& path, int H, int W, double sigma) {
    return render_landmarks(load_landmark_points(path), H, W, sigma);
}

LandmarkMap template_landmarks(int H, int W, double sigma) {
    auto norm = template_landmark_points();
    std::vector<std::pair<double, double>> px;
    px.reserve(norm.size());
    for (auto [x, y] : norm) px.emplace_back(x * (W - 1), y * (H - 1));
    return render_landmarks(px, H, W, sigma);
}

Tensor collapse_landmarks(const LandmarkMap& lm) {
    int K = lm.heatmap.shape()[0], H = lm.heatmap.shape()[1], W = lm.heatmap.shape()[2];
    Tensor out({1, H, W}, 0.0);
    for (int k = 0; k < K; ++k)
        for (int64_t i = 0; i < static_cast<int64_t>(H) * W; ++i)
            out[i] = std::max(out[i], lm.heatmap[static_cast<int64_t>(k) * H * W + i]);
    return out;
}

}  // namespace ftdr::inpaint
