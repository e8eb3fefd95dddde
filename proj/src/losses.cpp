#include "ftdr/losses.hpp"

namespace ftdr::loss {

namespace {
constexpr int kStageChannels[5] = {16, 32, 64, 128, 256};

// (H, W, C) -> (1, 3, H, W); single-channel images repeat across RGB.
Tensor as_rgb_nchw(const Image& image) {
    check_image(image, "feature extractor input");
    Tensor x = image;
    if (image.shape()[2] == 1) x = concat({image, image, image}, 2);
    return nchw(x);
}
}  // namespace

FeatureExtractor::FeatureExtractor(uint64_t seed) {
    SplitMix64 rng(seed);
    int in_c = 3;
    for (int p = 0; p < 5; ++p) {
        convs_.emplace_back(params_, "fx.stage" + std::to_string(p + 1), in_c,
                            kStageChannels[p], 4, 2, 1, rng);
        in_c = kStageChannels[p];
    }
    // frozen
    for (auto& [name, t] : params_.items()) t.set_requires_grad(false);
    calibrate_descriptor(seed);
}

// Pooled deep responses of a random frozen tower concentrate around an
// input-independent mean, with their fluctuations dominated by a handful of
// low-order modes (brightness and friends). The descriptor subtracts the
// calibration mean and deflates the top modes so cosine comparisons respond
// to image content rather than those shared statistics.
void FeatureExtractor::calibrate_descriptor(uint64_t seed) {
    NoGradGuard ng;
    const int kSamples = 96;
    const int kModes = 4;
    int C = kStageChannels[4];
    SplitMix64 rng(seed ^ 0x5ca1ab1eULL);
    std::vector<std::vector<double>> cal;
    cal.reserve(kSamples);
    for (int i = 0; i < kSamples; ++i) {
        int sz = (i % 2 == 0) ? 64 : 32;
        Image noise = Tensor::uniform({sz, sz, 3}, rng, 0.0, 1.0);
        Tensor deepest = features(noise).back();
        Tensor pooled = mean(reshape(deepest, {C, deepest.shape()[2] * deepest.shape()[3]}), 1);
        cal.emplace_back(pooled.data(), pooled.data() + C);
    }
    descriptor_mean_ = Tensor::zeros({C});
    for (const auto& v : cal)
        for (int c = 0; c < C; ++c) descriptor_mean_[c] += v[static_cast<size_t>(c)] / kSamples;
    for (auto& v : cal)
        for (int c = 0; c < C; ++c) v[static_cast<size_t>(c)] -= descriptor_mean_[c];

    auto dot = [C](const double* a, const double* b) {
        double s = 0.0;
        for (int c = 0; c < C; ++c) s += a[c] * b[c];
        return s;
    };
    descriptor_modes_.clear();
    for (int k = 0; k < kModes; ++k) {
        std::vector<double> v(static_cast<size_t>(C), 1.0 / std::sqrt(static_cast<double>(C)));
        std::vector<double> av(static_cast<size_t>(C));
        for (int it = 0; it < 100; ++it) {
            std::fill(av.begin(), av.end(), 0.0);
            for (const auto& x : cal) {
                double p = dot(x.data(), v.data());
                for (int c = 0; c < C; ++c) av[static_cast<size_t>(c)] += p * x[static_cast<size_t>(c)];
            }
            for (const auto& m : descriptor_modes_) {
                double p = dot(av.data(), m.data());
                for (int c = 0; c < C; ++c) av[static_cast<size_t>(c)] -= p * m[c];
            }
            double n = std::sqrt(dot(av.data(), av.data()));
            if (n < 1e-12) break;
            for (int c = 0; c < C; ++c) v[static_cast<size_t>(c)] = av[static_cast<size_t>(c)] / n;
        }
        descriptor_modes_.push_back(Tensor({C}, v));
    }
}

std::vector<Tensor> FeatureExtractor::features(const Image& image) const {
    Tensor x = as_rgb_nchw(image);
    std::vector<Tensor> taps;
    for (const auto& conv : convs_) {
        x = relu(conv(x));
        taps.push_back(x);
    }
    return taps;
}

Tensor FeatureExtractor::deepest_descriptor(const Image& image) const {
    Tensor deepest = features(image).back();  // (1, C, H, W)
    int C = deepest.shape()[1];
    Tensor flat = reshape(deepest, {C, deepest.shape()[2] * deepest.shape()[3]});
    Tensor pooled = mean(flat, 1);  // (C)
    Tensor centered = sub(pooled, descriptor_mean_);
    for (const Tensor& m : descriptor_modes_) {
        double p = 0.0;
        for (int c = 0; c < C; ++c) p += centered[c] * m[c];
        centered = sub(centered, scale(m, p));
    }
    return centered;
}

LossWeights LossWeights::preset(const std::string& name) {
    LossWeights w;
    if (name == "celeba_hq") return w;
    if (name == "celeba") {
        w.recons = 5.0;
        return w;
    }
    throw ContractError("unknown loss preset: " + name);
}

Tensor reconstruction_loss(const Image& pred, const Image& gt, const Tensor& mask) {
    if (pred.shape() != gt.shape()) throw ShapeError("reconstruction_loss shape mismatch");
    if (mask.rank() != 2) throw ShapeError("reconstruction_loss mask must be (H, W)");
    double mask_sum = 0.0;
    for (int64_t i = 0; i < mask.numel(); ++i) mask_sum += mask[i];
    double n_m = mask_sum * pred.shape()[2];  // masked elements across channels
    if (n_m == 0.0) return Tensor::scalar(0.0);
    Tensor m3 = reshape(mask, {mask.shape()[0], mask.shape()[1], 1});
    return scale(l1_norm(mul(sub(pred, gt), m3)), 1.0 / n_m);
}

Tensor perceptual_loss(const Image& pred, const Image& gt, const FeatureExtractor& fx) {
    auto fp = fx.features(pred);
    auto fg = fx.features(gt);
    Tensor total = Tensor::scalar(0.0);
    for (size_t p = 0; p < fp.size(); ++p) {
        double denom = static_cast<double>(fp[p].numel());
        total = add(total, scale(l1_norm(sub(fp[p], fg[p])), 1.0 / denom));
    }
    return total;
}

Tensor style_loss(const Image& pred, const Image& gt, const Tensor& mask,
                  const FeatureExtractor& fx) {
    if (mask.rank() != 2) throw ShapeError("style_loss mask must be (H, W)");
    Tensor m3 = reshape(mask, {mask.shape()[0], mask.shape()[1], 1});
    auto fp = fx.features(mul(pred, m3));
    auto fg = fx.features(mul(gt, m3));
    Tensor total = Tensor::scalar(0.0);
    for (size_t p = 0; p < fp.size(); ++p) {
        int C = fp[p].shape()[1];
        int hw = fp[p].shape()[2] * fp[p].shape()[3];
        Tensor ap = reshape(fp[p], {C, hw});
        Tensor ag = reshape(fg[p], {C, hw});
        Tensor gram_p = matmul(ap, transpose(ap));
        Tensor gram_g = matmul(ag, transpose(ag));
        double inner = 1.0 / (static_cast<double>(C) * hw);
        double outer = 1.0 / (static_cast<double>(C) * C);
        total = add(total, scale(l1_norm(scale(sub(gram_p, gram_g), inner)), outer));
    }
    return total;
}

Tensor tv_loss(const Image& pred) {
    check_image(pred, "tv_loss");
    int H = pred.shape()[0], W = pred.shape()[1];
    Tensor dh = sub(narrow(pred, 1, 1, W - 1), narrow(pred, 1, 0, W - 1));
    Tensor dv = sub(narrow(pred, 0, 1, H - 1), narrow(pred, 0, 0, H - 1));
    return scale(add(l1_norm(dh), l1_norm(dv)), 1.0 / static_cast<double>(pred.numel()));
}

Tensor total_loss(const Tensor& recons, const Tensor& adv_g, const Tensor& perc,
                  const Tensor& style, const Tensor& tv, const LossWeights& w) {
    Tensor t = scale(recons, w.recons);
    t = add(t, scale(adv_g, w.adv));
    t = add(t, scale(perc, w.perc));
    t = add(t, scale(style, w.style));
    t = add(t, scale(tv, w.tv));
    return t;
}

}  // namespace ftdr::loss
