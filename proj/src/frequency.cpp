#include "ftdr/frequency.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

namespace ftdr::freq {

namespace {

// Orthonormal DCT-II basis, row-major: basis[u*N + n] = a(u) cos(pi (2n+1) u / 2N).
std::shared_ptr<const std::vector<double>> dct_basis(int n) {
    static std::mutex mu;
    static std::map<int, std::shared_ptr<const std::vector<double>>> cache;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    auto basis = std::make_shared<std::vector<double>>(static_cast<size_t>(n) * n);
    for (int u = 0; u < n; ++u) {
        double a = std::sqrt((u == 0 ? 1.0 : 2.0) / n);
        for (int i = 0; i < n; ++i)
            (*basis)[static_cast<size_t>(u) * n + i] =
                a * std::cos(M_PI * (2.0 * i + 1.0) * u / (2.0 * n));
    }
    cache[n] = basis;
    return basis;
}

void check_channel(const Tensor& t) {
    if (t.rank() != 2) throw ShapeError("dct2 expects an (H, W) channel");
}

}  // namespace

FrequencySpectrum dct2(const Tensor& image_channel) {
    check_channel(image_channel);
    int H = image_channel.shape()[0], W = image_channel.shape()[1];
    auto ch = dct_basis(H);
    auto cw = dct_basis(W);
    // rows: tmp = X * Cw^T, then columns: out = Ch * tmp
    std::vector<double> tmp(static_cast<size_t>(H) * W);
    detail::mm_nt(image_channel.data(), cw->data(), tmp.data(), H, W, W, false);
    Tensor out({H, W});
    detail::mm_nn(ch->data(), tmp.data(), out.data(), H, H, W, false);
    return {out};
}

Tensor idct2(const FrequencySpectrum& spectrum) {
    check_channel(spectrum.coeffs);
    int H = spectrum.height(), W = spectrum.width();
    auto ch = dct_basis(H);
    auto cw = dct_basis(W);
    // x = Ch^T * C * Cw
    std::vector<double> tmp(static_cast<size_t>(H) * W);
    detail::mm_tn(ch->data(), spectrum.coeffs.data(), tmp.data(), H, H, W, false);
    Tensor out({H, W});
    detail::mm_nn(tmp.data(), cw->data(), out.data(), H, W, W, false);
    return out;
}

FrequencySpectrum high_pass(const FrequencySpectrum& spectrum, const HighPassConfig& cfg) {
    if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0))
        throw ContractError("high_pass alpha must lie in (0, 1)");
    int H = spectrum.height(), W = spectrum.width();
    double cut = cfg.alpha * (H + W);
    Tensor out = spectrum.coeffs.detach();
    double* p = out.data();
    for (int u = 0; u < H; ++u)
        for (int v = 0; v < W; ++v)
            if (u + v < cut) p[static_cast<size_t>(u) * W + v] = 0.0;
    return {out};
}

Tensor luma(const Tensor& image) {
    if (image.rank() == 2) return image.detach();
    if (image.rank() != 3 || (image.shape()[2] != 1 && image.shape()[2] != 3))
        throw ShapeError("luma expects (H, W, C) with C in {1, 3}");
    int H = image.shape()[0], W = image.shape()[1], C = image.shape()[2];
    Tensor out({H, W});
    const double* src = image.data();
    double* dst = out.data();
    if (C == 1) {
        for (int64_t i = 0; i < out.numel(); ++i) dst[i] = src[i];
    } else {
        for (int64_t i = 0; i < out.numel(); ++i) {
            const double* px = src + i * 3;
            dst[i] = 0.299 * px[0] + 0.587 * px[1] + 0.114 * px[2];
        }
    }
    return out;
}

Tensor frequency_representation(const Tensor& image, const HighPassConfig& cfg) {
    Tensor y = luma(image);
    Tensor f = idct2(high_pass(dct2(y), cfg));
    return reshape(f, {f.shape()[0], f.shape()[1], 1});
}

}  // namespace ftdr::freq
