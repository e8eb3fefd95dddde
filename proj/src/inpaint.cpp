#include "ftdr/inpaint.hpp"

#include <cmath>

namespace ftdr::inpaint {

MaskPyramid MaskPyramid::build(const BinaryMask& mask) {
    int H = mask.shape()[0], W = mask.shape()[1];
    return {mask, nearest_resize(mask, H / 2, W / 2)};
}

Tensor mask_select(const Tensor& a, const Tensor& b, const Tensor& m) {
    if (a.shape() != b.shape()) throw ShapeError("mask_select operands differ in shape");
    if (m.rank() != 2) throw ShapeError("mask_select mask must be (H, W)");
    Tensor m1 = reshape(m, {1, m.shape()[0], m.shape()[1]});
    Tensor keep = add_scalar(scale(m1, -1.0), 1.0);
    return add(mul(a, m1), mul(b, keep));
}

namespace {

// x (C,h,w) standardized over the sites where region (h,w) is 1.
Tensor standardize_region(const Tensor& x, const Tensor& region, double count) {
    constexpr double kEps = 1e-5;
    int C = x.shape()[0], h = x.shape()[1], w = x.shape()[2];
    Tensor r1 = reshape(region, {1, h, w});
    Tensor masked = mul(x, r1);
    Tensor mu = scale(sum(sum(masked, 2), 1), 1.0 / count);          // (C)
    Tensor centered = mul(sub(x, reshape(mu, {C, 1, 1})), r1);       // zero off-region
    Tensor var = scale(sum(sum(mul(centered, centered), 2), 1), 1.0 / count);
    Tensor inv_std = div(Tensor::ones({C}), sqrt(add_scalar(var, kEps)));
    return mul(centered, reshape(inv_std, {C, 1, 1}));
}

}  // namespace

Tensor region_normalize(const Tensor& x, const BinaryMask& m, const Tensor& gamma,
                        const Tensor& beta) {
    if (x.rank() != 3) throw ShapeError("region_normalize expects (C, h, w)");
    if (m.rank() != 2 || m.shape()[0] != x.shape()[1] || m.shape()[1] != x.shape()[2])
        throw ShapeError("region_normalize mask must match the spatial extent");
    int C = x.shape()[0], h = x.shape()[1], w = x.shape()[2];
    double masked_count = 0.0;
    for (int64_t i = 0; i < m.numel(); ++i) masked_count += m[i];
    double unmasked_count = static_cast<double>(m.numel()) - masked_count;

    Tensor inv = add_scalar(scale(m, -1.0), 1.0);
    Tensor result;
    if (masked_count > 0.0 && unmasked_count > 0.0) {
        result = add(standardize_region(x, m, masked_count),
                     standardize_region(x, inv, unmasked_count));
    } else if (masked_count > 0.0) {
        result = standardize_region(x, m, masked_count);
    } else if (unmasked_count > 0.0) {
        result = standardize_region(x, inv, unmasked_count);
    } else {
        result = x;  // degenerate empty plane
    }
    if (gamma.defined()) result = mul(result, reshape(gamma, {C, 1, 1}));
    if (beta.defined()) result = add(result, reshape(beta, {C, 1, 1}));
    return result;
}

LongShortAttention::LongShortAttention(ParamStore& ps, const std::string& name, int channels,
                                       int qk_div, SplitMix64& rng) {
    int qk = std::max(1, channels / qk_div);
    q_ = nn::Conv2d(ps, name + ".q", channels, qk, 1, 1, 0, rng);
    k_ = nn::Conv2d(ps, name + ".k", channels, qk, 1, 1, 0, rng);
    v_long_ = nn::Conv2d(ps, name + ".vl", channels, channels, 1, 1, 0, rng);
    v_short_ = nn::Conv2d(ps, name + ".vs", channels, channels, 1, 1, 0, rng);
    out_long = nn::Conv2d(ps, name + ".ol", channels, channels, 1, 1, 0, rng);
    out_short = nn::Conv2d(ps, name + ".os", channels, channels, 1, 1, 0, rng);
}

Tensor LongShortAttention::operator()(const Tensor& pre, const Tensor& post) const {
    if (pre.shape() != post.shape())
        throw ShapeError("long_short_attention expects matching shapes");
    int C = post.shape()[0], h = post.shape()[1], w = post.shape()[2];
    int hw = h * w;
    auto as_batch = [&](const Tensor& t) { return reshape(t, {1, C, h, w}); };
    auto site_major = [&](const Tensor& t) {
        // (1, c, h, w) -> (hw, c)
        return transpose(reshape(t, {t.shape()[1], hw}));
    };
    Tensor q = site_major(q_(as_batch(post)));
    Tensor k = site_major(k_(as_batch(post)));
    double dk = static_cast<double>(q.shape()[1]);
    Tensor attn = softmax(scale(matmul(q, transpose(k)), 1.0 / std::sqrt(dk)), 1);  // (hw, hw)
    Tensor vl = site_major(v_long_(as_batch(post)));
    Tensor vs = site_major(v_short_(as_batch(pre)));
    auto back = [&](const Tensor& t) {
        // (hw, c) -> (1, c, h, w)
        return reshape(transpose(t), {1, C, h, w});
    };
    Tensor long_term = out_long(back(matmul(attn, vl)));
    Tensor short_term = out_short(back(matmul(attn, vs)));
    Tensor merged = add(add(as_batch(post), long_term), short_term);
    return reshape(merged, {C, h, w});
}

Tdrb::Tdrb(ParamStore& ps, const std::string& name, int in_c, int out_c, int deconv_stride,
           SplitMix64& rng) {
    // stride 2 doubles the extent (k4 p1); stride 1 keeps it (k3 p1)
    int k = deconv_stride == 2 ? 4 : 3;
    up_ = nn::Deconv2d(ps, name + ".up", in_c, out_c, k, deconv_stride, 1, rng);
    fuse_ = nn::Conv2d(ps, name + ".fuse", out_c, out_c, 1, 1, 0, rng);
    refine_ = nn::Conv2d(ps, name + ".refine", out_c, out_c, 3, 1, 1, rng);
    gamma_ = ps.create(name + ".rn_gamma", Tensor::ones({out_c}));
    gamma_.set_requires_grad(true);
    beta_ = ps.create(name + ".rn_beta", Tensor::zeros({out_c}));
    beta_.set_requires_grad(true);
}

Tensor Tdrb::operator()(const Tensor& phi_d, const Tensor& phi_e, const BinaryMask& m,
                        Tensor* fused_out) const {
    Tensor up = up_(reshape(phi_d, {1, phi_d.shape()[0], phi_d.shape()[1], phi_d.shape()[2]}));
    up = reshape(up, {up.shape()[1], up.shape()[2], up.shape()[3]});
    if (up.shape() != phi_e.shape())
        throw ShapeError("tdrb: upsampled decoder features do not match the skip");
    if (m.shape()[0] != phi_e.shape()[1] || m.shape()[1] != phi_e.shape()[2])
        throw ShapeError("tdrb: mask does not match the skip resolution");
    Tensor gated = mask_select(up, phi_e, m);
    if (fused_out) *fused_out = gated;
    Tensor fused = fuse_(reshape(gated, {1, gated.shape()[0], gated.shape()[1], gated.shape()[2]}));
    fused = reshape(fused, {fused.shape()[1], fused.shape()[2], fused.shape()[3]});
    Tensor normed = region_normalize(fused, m, gamma_, beta_);
    Tensor refined =
        refine_(reshape(normed, {1, normed.shape()[0], normed.shape()[1], normed.shape()[2]}));
    return relu(reshape(refined, {refined.shape()[1], refined.shape()[2], refined.shape()[3]}));
}

Generator::Generator(ParamStore& ps, const GeneratorConfig& cfg, SplitMix64& rng) : cfg_(cfg) {
    if (cfg.dilations.size() != static_cast<size_t>(cfg.res_blocks))
        throw ContractError("generator dilation schedule must list one entry per block");
    int in_c = 3 + 1 + cfg.landmark_channels;
    stem_ = nn::Conv2d(ps, "gen.stem", in_c, cfg.channels0, 3, 1, 1, rng);
    down1_ = nn::Conv2d(ps, "gen.down1", cfg.channels0, cfg.channels1, 4, 2, 1, rng);
    down2_ = nn::Conv2d(ps, "gen.down2", cfg.channels1, cfg.channels2, 4, 2, 1, rng);
    for (int i = 0; i < cfg.res_blocks; ++i) {
        int d = cfg.dilations[static_cast<size_t>(i)];
        std::string base = "gen.res" + std::to_string(i);
        blocks_.push_back({nn::Conv2d(ps, base + ".c1", cfg.channels2, cfg.channels2, 3, 1, d,
                                      rng, d),
                           nn::Conv2d(ps, base + ".c2", cfg.channels2, cfg.channels2, 3, 1, d,
                                      rng, d)});
    }
    attention_ = LongShortAttention(ps, "gen.lsattn", cfg.channels2, cfg.attention_heads_dim, rng);
    tdrb1_ = Tdrb(ps, "gen.tdrb1", cfg.channels2, cfg.channels1, 2, rng);
    tdrb2_ = Tdrb(ps, "gen.tdrb2", cfg.channels1, cfg.channels0, 2, rng);
    tdrb3_ = Tdrb(ps, "gen.tdrb3", cfg.channels0, cfg.channels0, 1, rng);
    to_rgb_ = nn::Conv2d(ps, "gen.to_rgb", cfg.channels0, 3, 3, 1, 1, rng);
}

FeaturePyramid Generator::encode(const Image& i_m_bin, const Tensor& mask,
                                 const LandmarkMap& lm) const {
    check_image(i_m_bin, "generator input");
    if (i_m_bin.shape()[2] != 3) throw ShapeError("generator expects an RGB input");
    int H = i_m_bin.shape()[0], W = i_m_bin.shape()[1];
    if (mask.rank() != 2 || mask.shape()[0] != H || mask.shape()[1] != W)
        throw ShapeError("generator mask must be (H, W)");
    Tensor lm_chw = cfg_.landmark_channels == 1 ? collapse_landmarks(lm) : lm.heatmap;
    if (lm_chw.shape()[0] != cfg_.landmark_channels || lm_chw.shape()[1] != H ||
        lm_chw.shape()[2] != W)
        throw ShapeError("generator landmark map does not match (K, H, W)");

    Tensor x = concat({chw(i_m_bin), reshape(mask, {1, H, W}), lm_chw}, 0);
    x = reshape(x, {1, x.shape()[0], H, W});
    FeaturePyramid pyr;
    Tensor full = relu(stem_(x));
    pyr.full = reshape(full, {cfg_.channels0, H, W});
    Tensor half = relu(down1_(full));
    pyr.half = reshape(half, {cfg_.channels1, H / 2, W / 2});
    Tensor quarter = relu(down2_(half));
    pyr.quarter = reshape(quarter, {cfg_.channels2, H / 4, W / 4});

    Tensor y = quarter;
    for (const auto& block : blocks_) y = add(y, block.c2(relu(block.c1(y))));
    pyr.residual_out = reshape(y, {cfg_.channels2, H / 4, W / 4});
    pyr.bottleneck = attention_(pyr.quarter, pyr.residual_out);
    return pyr;
}

Image Generator::generate(const Image& i_m_bin, const Tensor& mask, const LandmarkMap& lm,
                          Tensor* raw_out) const {
    FeaturePyramid pyr = encode(i_m_bin, mask, lm);
    // gating masks must stay binary; joint training may pass a soft mask for
    // the blend, so binarize a detached copy for the pyramid
    BinaryMask hard({mask.shape()[0], mask.shape()[1]});
    for (int64_t i = 0; i < mask.numel(); ++i) hard[i] = mask[i] >= 0.5 ? 1.0 : 0.0;
    MaskPyramid masks = MaskPyramid::build(hard);

    Tensor d1 = tdrb1_(pyr.bottleneck, pyr.half, masks.half);
    Tensor d2 = tdrb2_(d1, pyr.full, masks.full);
    Tensor d3 = tdrb3_(d2, pyr.full, masks.full);
    Tensor rgb = to_rgb_(reshape(d3, {1, d3.shape()[0], d3.shape()[1], d3.shape()[2]}));
    rgb = reshape(rgb, {3, rgb.shape()[2], rgb.shape()[3]});
    Tensor raw = scale(add_scalar(tanh(rgb), 1.0), 0.5);  // [0, 1]
    Image raw_img = hwc(raw);
    if (raw_out) *raw_out = raw_img;

    // composite: unmasked pixels pass through bit-exactly
    Tensor m3 = reshape(mask, {mask.shape()[0], mask.shape()[1], 1});
    Tensor keep = add_scalar(scale(m3, -1.0), 1.0);
    return add(mul(i_m_bin, keep), mul(raw_img, m3));
}

}  // namespace ftdr::inpaint
