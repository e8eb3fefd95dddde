#include "ftdr/image.hpp"

#include <algorithm>
#include <cmath>

namespace ftdr {

Tensor chw(const Tensor& image) {
    if (image.rank() != 3) throw ShapeError("chw expects (H, W, C)");
    return permute(image, {2, 0, 1});
}

Tensor hwc(const Tensor& t) {
    if (t.rank() != 3) throw ShapeError("hwc expects (C, H, W)");
    return permute(t, {1, 2, 0});
}

Tensor nchw(const Tensor& image) {
    Tensor c = chw(image);
    return reshape(c, {1, c.shape()[0], c.shape()[1], c.shape()[2]});
}

void check_image(const Tensor& image, const char* what) {
    if (image.rank() != 3 || (image.shape()[2] != 1 && image.shape()[2] != 3))
        throw ShapeError(std::string(what) + ": expected (H, W, C) with C in {1, 3}");
}

void check_binary_mask(const Tensor& mask, const char* what) {
    if (mask.rank() != 2) throw ShapeError(std::string(what) + ": mask must be (H, W)");
    for (int64_t i = 0; i < mask.numel(); ++i)
        if (mask[i] != 0.0 && mask[i] != 1.0)
            throw ContractError(std::string(what) + ": mask value not in {0, 1}");
}

Tensor nearest_resize(const Tensor& t, int out_h, int out_w) {
    if (t.rank() != 2 && t.rank() != 3) throw ShapeError("nearest_resize expects (H,W) or (H,W,C)");
    int H = t.shape()[0], W = t.shape()[1];
    int C = t.rank() == 3 ? t.shape()[2] : 1;
    std::vector<int> os = t.rank() == 3 ? std::vector<int>{out_h, out_w, C}
                                        : std::vector<int>{out_h, out_w};
    Tensor out(os);
    const double* src = t.data();
    double* dst = out.data();
    for (int y = 0; y < out_h; ++y) {
        int sy = std::min(static_cast<int>((y + 0.5) * H / out_h), H - 1);
        for (int x = 0; x < out_w; ++x) {
            int sx = std::min(static_cast<int>((x + 0.5) * W / out_w), W - 1);
            for (int c = 0; c < C; ++c)
                dst[(static_cast<size_t>(y) * out_w + x) * C + c] =
                    src[(static_cast<size_t>(sy) * W + sx) * C + c];
        }
    }
    return out;
}

Tensor bilinear_resize(const Tensor& image, int out_h, int out_w) {
    check_image(image, "bilinear_resize");
    int H = image.shape()[0], W = image.shape()[1], C = image.shape()[2];
    Tensor out({out_h, out_w, C});
    const double* src = image.data();
    double* dst = out.data();
    for (int y = 0; y < out_h; ++y) {
        double sy = (y + 0.5) * H / out_h - 0.5;
        int y0 = static_cast<int>(std::floor(sy));
        double ty = sy - y0;
        int y1 = std::clamp(y0 + 1, 0, H - 1);
        y0 = std::clamp(y0, 0, H - 1);
        for (int x = 0; x < out_w; ++x) {
            double sx = (x + 0.5) * W / out_w - 0.5;
            int x0 = static_cast<int>(std::floor(sx));
            double tx = sx - x0;
            int x1 = std::clamp(x0 + 1, 0, W - 1);
            x0 = std::clamp(x0, 0, W - 1);
            for (int c = 0; c < C; ++c) {
                auto at = [&](int yy, int xx) {
                    return src[(static_cast<size_t>(yy) * W + xx) * C + c];
                };
                double top = at(y0, x0) * (1 - tx) + at(y0, x1) * tx;
                double bot = at(y1, x0) * (1 - tx) + at(y1, x1) * tx;
                dst[(static_cast<size_t>(y) * out_w + x) * C + c] = top * (1 - ty) + bot * ty;
            }
        }
    }
    return out;
}

}  // namespace ftdr
