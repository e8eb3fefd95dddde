#include "ftdr/maskdetect.hpp"

#include <cmath>

namespace ftdr::detect {

namespace {

void validate(const DetectorConfig& cfg) {
    if (cfg.grid != 8) throw ContractError("detector patch grid must be 8 (P = 64)");
    if (cfg.image_size % 64 != 0)
        throw ShapeError("detector image_size must be divisible by 64, got " +
                         std::to_string(cfg.image_size));
    if (cfg.embed_channels % cfg.heads != 0)
        throw ShapeError("embed_channels must be divisible by the head count");
    if (cfg.head_channels.size() != 3)
        throw ContractError("upsample head needs exactly three x2 stages");
}

// Fixed sinusoidal encoding over token index.
Tensor sinusoidal_encoding(int P, int Q) {
    Tensor pe({P, Q});
    for (int i = 0; i < P; ++i)
        for (int d = 0; d < Q; ++d) {
            double rate = std::pow(10000.0, -2.0 * (d / 2) / static_cast<double>(Q));
            double v = i * rate;
            pe[static_cast<int64_t>(i) * Q + d] = (d % 2 == 0) ? std::sin(v) : std::cos(v);
        }
    return pe;
}

// (C, H, W) -> (C, H/f, W/f) by mean over f x f blocks, built from reshapes
// and axis means so it stays on the tape.
Tensor block_mean_pool(const Tensor& x, int f) {
    int C = x.shape()[0], H = x.shape()[1], W = x.shape()[2];
    if (H % f != 0 || W % f != 0) throw ShapeError("block_mean_pool extent not divisible");
    Tensor r = reshape(x, {C, H / f, f, W / f, f});
    r = mean(r, 4);
    r = mean(r, 2);
    return r;
}

}  // namespace

Tensor scaled_dot_attention(const Tensor& q, const Tensor& k) {
    if (q.rank() != 2 || k.rank() != 2 || q.shape() != k.shape())
        throw ShapeError("scaled_dot_attention expects matching (P, d_k) tensors");
    double dk = static_cast<double>(q.shape()[1]);
    Tensor logits = scale(matmul(q, transpose(k)), 1.0 / std::sqrt(dk));
    return softmax(logits, 1);
}

Tensor dual_attention(const Tensor& attn, const Tensor& attn_freq, const Tensor& w,
                      const Tensor& b) {
    if (attn.rank() != 3) throw ShapeError("dual_attention expects (N_h, P, P) attention");
    int nh = attn.shape()[0], P = attn.shape()[1];
    int c = attn_freq.defined() ? attn_freq.shape()[0] : 0;
    if (attn_freq.defined() &&
        (attn_freq.rank() != 3 || attn_freq.shape()[1] != P || attn_freq.shape()[2] != P))
        throw ShapeError("dual_attention frequency maps must be (C, P, P)");
    Tensor stacked = attn_freq.defined() && c > 0 ? concat({attn, attn_freq}, 0) : attn;
    // 1x1 conv across the channel axis == matmul on flattened maps
    Tensor flat = transpose(reshape(stacked, {nh + c, P * P}));  // (P*P, nh+c)
    Tensor mixed = matmul(flat, w);                              // (P*P, nh)
    if (b.defined()) mixed = add(mixed, b);
    Tensor logits = reshape(transpose(mixed), {nh, P, P});
    return softmax(logits, 2);
}

Tensor patch_similarity(const Tensor& feature_map) {
    if (feature_map.rank() != 3) throw ShapeError("patch_similarity expects (C, h, w)");
    int C = feature_map.shape()[0], h = feature_map.shape()[1], w = feature_map.shape()[2];
    if (h < 3 || w < 3) throw ShapeError("patch_similarity needs h, w >= 3");
    const double* t = feature_map.data();
    int64_t plane = static_cast<int64_t>(h) * w;

    // per-site L2 norms
    std::vector<double> norms(static_cast<size_t>(plane));
    for (int64_t i = 0; i < plane; ++i) {
        double acc = 0.0;
        for (int c = 0; c < C; ++c) {
            double v = t[c * plane + i];
            acc += v * v;
        }
        norms[static_cast<size_t>(i)] = std::sqrt(acc);
    }

    Tensor out({h, w});
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            int64_t i = static_cast<int64_t>(y) * w + x;
            double acc = 0.0;
            int count = 0;
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx) {
                    int ny = y + dy, nx = x + dx;
                    if (ny < 0 || ny >= h || nx < 0 || nx >= w) continue;
                    ++count;
                    int64_t j = static_cast<int64_t>(ny) * w + nx;
                    double nn = norms[static_cast<size_t>(i)] * norms[static_cast<size_t>(j)];
                    if (nn == 0.0) continue;  // zero-norm vector: cosine treated as 0
                    double dot = 0.0;
                    for (int c = 0; c < C; ++c) dot += t[c * plane + i] * t[c * plane + j];
                    acc += dot / nn;
                }
            out[i] = acc / count;
        }

    if (Graph::current().recording() && feature_map.requires_grad()) {
        out.set_requires_grad(true);
        auto ti = feature_map.ptr(), oi = out.ptr();
        auto norms_c = norms;
        Graph::current().record("patch_similarity", oi, [=]() {
            if (ti->grad.empty()) ti->grad.assign(ti->data.size(), 0.0);
            const double* g = oi->grad.data();
            const double* td = ti->data.data();
            double* gt = ti->grad.data();
            for (int y = 0; y < h; ++y)
                for (int x = 0; x < w; ++x) {
                    int64_t i = static_cast<int64_t>(y) * w + x;
                    int count = 0;
                    for (int dy = -1; dy <= 1; ++dy)
                        for (int dx = -1; dx <= 1; ++dx) {
                            int ny = y + dy, nx = x + dx;
                            if (ny >= 0 && ny < h && nx >= 0 && nx < w) ++count;
                        }
                    double gi = g[i] / count;
                    if (gi == 0.0) continue;
                    double ni = norms_c[static_cast<size_t>(i)];
                    for (int dy = -1; dy <= 1; ++dy)
                        for (int dx = -1; dx <= 1; ++dx) {
                            if (dy == 0 && dx == 0) continue;  // d cos(T_i,T_i) / dT = 0
                            int ny = y + dy, nx = x + dx;
                            if (ny < 0 || ny >= h || nx < 0 || nx >= w) continue;
                            int64_t j = static_cast<int64_t>(ny) * w + nx;
                            double nj = norms_c[static_cast<size_t>(j)];
                            if (ni == 0.0 || nj == 0.0) continue;
                            double dot = 0.0;
                            for (int c = 0; c < C; ++c)
                                dot += td[c * plane + i] * td[c * plane + j];
                            double s = dot / (ni * nj);
                            for (int c = 0; c < C; ++c) {
                                double vi = td[c * plane + i];
                                double vj = td[c * plane + j];
                                gt[c * plane + i] += gi * (vj / (ni * nj) - s * vi / (ni * ni));
                                gt[c * plane + j] += gi * (vi / (ni * nj) - s * vj / (nj * nj));
                            }
                        }
                }
        });
    }
    return out;
}

Tensor detection_loss(const Tensor& mask_prob, const BinaryMask& gt) {
    if (mask_prob.shape() != gt.shape()) throw ShapeError("detection_loss shape mismatch");
    check_binary_mask(gt, "detection_loss");
    constexpr double kClamp = 1e-6;
    constexpr double kDiceEps = 1e-6;
    Tensor p = clamp(mask_prob, kClamp, 1.0 - kClamp);
    Tensor one_minus_g = add_scalar(scale(gt, -1.0), 1.0);
    Tensor one_minus_p = add_scalar(scale(p, -1.0), 1.0);
    Tensor bce = scale(mean(add(mul(gt, log(p)), mul(one_minus_g, log(one_minus_p)))), -1.0);
    Tensor inter = sum(mul(mask_prob, gt));
    Tensor denom = add_scalar(add(sum(mask_prob), sum(gt)), kDiceEps);
    Tensor dice = add_scalar(scale(div(inter, denom), -2.0), 1.0);
    return add(bce, dice);
}

Detector::Detector(ParamStore& ps, const DetectorConfig& cfg, SplitMix64& rng) : cfg_(cfg) {
    validate(cfg);
    int C = cfg.embed_channels;
    stem1_ = nn::Conv2d(ps, "det.stem1", 3, cfg.stem_channels, 3, 1, 1, rng);
    stem2_ = nn::Conv2d(ps, "det.stem2", cfg.stem_channels, C, 3, 1, 1, rng);
    pos_encoding_ = sinusoidal_encoding(cfg.patches(), cfg.token_dim());

    int ch = C / cfg.heads;
    for (int l = 0; l < cfg.layers; ++l) {
        Layer layer;
        std::string base = "det.enc" + std::to_string(l);
        for (int hd = 0; hd < cfg.heads; ++hd) {
            std::string hb = base + ".h" + std::to_string(hd);
            layer.wq.emplace_back(ps, hb + ".q", C, ch, rng, false);
            layer.wk.emplace_back(ps, hb + ".k", C, ch, rng, false);
            layer.wv.emplace_back(ps, hb + ".v", C, ch, rng, false);
        }
        layer.dual = nn::Linear(ps, base + ".dual", cfg.heads + cfg.freq_channels, cfg.heads, rng);
        layer.out_proj = nn::Linear(ps, base + ".proj", C, C, rng);
        layer.mlp1 = nn::Linear(ps, base + ".mlp1", C, cfg.mlp_hidden, rng);
        layer.mlp2 = nn::Linear(ps, base + ".mlp2", cfg.mlp_hidden, C, rng);
        layers_.push_back(std::move(layer));
    }

    freq_tower_.emplace_back(ps, "det.freq1", 1, 8, 2, 2, 0, rng);
    freq_tower_.emplace_back(ps, "det.freq2", 8, 16, 2, 2, 0, rng);
    freq_tower_.emplace_back(ps, "det.freq3", 16, cfg.freq_descriptor, 2, 2, 0, rng);
    freq_bilinear_ = ps.create(
        "det.freq_bilinear",
        Tensor::kaiming({cfg.freq_channels, cfg.freq_descriptor, cfg.freq_descriptor},
                        cfg.freq_descriptor, rng));
    freq_bilinear_.set_requires_grad(true);

    reassemble_ = nn::Conv2d(ps, "det.reassemble", C, C, 1, 1, 0, rng);

    int in_c = C;
    for (size_t i = 0; i < cfg.head_channels.size(); ++i) {
        head_convs_.emplace_back(ps, "det.head" + std::to_string(i), in_c,
                                 cfg.head_channels[i], 1, 1, 0, rng);
        in_c = cfg.head_channels[i];
    }
    head_final_ = nn::Conv2d(ps, "det.head_final", in_c, 1, 1, 1, 0, rng);
}

PatchSequence Detector::patch_embed(const Image& image) const {
    check_image(image, "patch_embed");
    int H = image.shape()[0], W = image.shape()[1];
    if (H != cfg_.image_size || W != cfg_.image_size)
        throw ShapeError("patch_embed expected " + std::to_string(cfg_.image_size) +
                         " square input, got " + std::to_string(H) + "x" + std::to_string(W));
    Tensor img = image.shape()[2] == 1 ? concat({image, image, image}, 2) : image;
    Tensor x = relu(stem1_(nchw(img)));
    x = stem2_(x);  // (1, C, H, W)
    int C = cfg_.embed_channels, g = cfg_.grid, pp = cfg_.patch_px();
    Tensor tok = reshape(x, {C, g, pp, g, pp});
    tok = permute(tok, {1, 3, 2, 4, 0});  // (gh, gw, ph, pw, C)
    tok = reshape(tok, {cfg_.patches(), cfg_.token_dim()});
    tok = add(tok, pos_encoding_);
    return {tok, g, g};
}

Tensor Detector::frequency_attention(const Tensor& f) const {
    if (f.rank() != 3 || f.shape()[2] != 1)
        throw ShapeError("frequency_attention expects (H, W, 1)");
    Tensor x = nchw(f);
    for (const auto& conv : freq_tower_) x = relu(conv(x));
    // (1, D, H/8, W/8) -> per-patch descriptors (P, D)
    int D = cfg_.freq_descriptor;
    Tensor map = reshape(x, {D, x.shape()[2], x.shape()[3]});
    Tensor pooled = block_mean_pool(map, x.shape()[2] / cfg_.grid);  // (D, g, g)
    Tensor desc = transpose(reshape(pooled, {D, cfg_.patches()}));   // (P, D)
    std::vector<Tensor> maps;
    for (int c = 0; c < cfg_.freq_channels; ++c) {
        Tensor form = reshape(narrow(freq_bilinear_, 0, c, 1), {D, D});
        Tensor m = matmul(matmul(desc, form), transpose(desc));  // (P, P)
        maps.push_back(reshape(m, {1, cfg_.patches(), cfg_.patches()}));
    }
    return concat(maps, 0);
}

Tensor Detector::encoder_stack(const PatchSequence& seq, const Tensor& attn_freq,
                               std::vector<Tensor>* dual_maps) const {
    int P = cfg_.patches(), S = cfg_.sites_per_patch(), C = cfg_.embed_channels;
    int ch = C / cfg_.heads;
    Tensor x = seq.embeddings;  // (P, Q)
    for (const auto& layer : layers_) {
        Tensor xc = reshape(x, {P * S, C});
        std::vector<Tensor> head_maps;
        std::vector<Tensor> values;
        for (int hd = 0; hd < cfg_.heads; ++hd) {
            Tensor q = reshape(layer.wq[static_cast<size_t>(hd)](xc), {P, S * ch});
            Tensor k = reshape(layer.wk[static_cast<size_t>(hd)](xc), {P, S * ch});
            values.push_back(reshape(layer.wv[static_cast<size_t>(hd)](xc), {P, S * ch}));
            head_maps.push_back(reshape(scaled_dot_attention(q, k), {1, P, P}));
        }
        Tensor attn = concat(head_maps, 0);  // (N_h, P, P)
        Tensor a_dual = dual_attention(attn, attn_freq, layer.dual.w, layer.dual.b);
        if (dual_maps) dual_maps->push_back(a_dual);
        std::vector<Tensor> head_outs;
        for (int hd = 0; hd < cfg_.heads; ++hd) {
            Tensor a = reshape(narrow(a_dual, 0, hd, 1), {P, P});
            head_outs.push_back(
                reshape(matmul(a, values[static_cast<size_t>(hd)]), {P * S, ch}));
        }
        Tensor attended = layer.out_proj(concat(head_outs, 1));  // (P*S, C)
        x = add(x, reshape(attended, {P, cfg_.token_dim()}));
        Tensor mid = relu(layer.mlp1(reshape(x, {P * S, C})));
        x = add(x, reshape(layer.mlp2(mid), {P, cfg_.token_dim()}));
    }
    // reassemble: (P, Q) -> (C, H, W) -> mean-pool x8 -> 1x1 conv
    int g = cfg_.grid, pp = cfg_.patch_px(), H = cfg_.image_size;
    Tensor map = reshape(x, {g, g, pp, pp, C});
    map = permute(map, {4, 0, 2, 1, 3});  // (C, gh, ph, gw, pw)
    map = reshape(map, {C, H, H});
    Tensor pooled = block_mean_pool(map, 8);
    Tensor t = reassemble_(reshape(pooled, {1, C, H / 8, H / 8}));
    return reshape(t, {C, H / 8, H / 8});
}

Tensor Detector::upsample_head(const Tensor& f_edge) const {
    if (f_edge.rank() != 3) throw ShapeError("upsample_head expects (C, h, w)");
    Tensor x = reshape(f_edge, {1, f_edge.shape()[0], f_edge.shape()[1], f_edge.shape()[2]});
    for (const auto& conv : head_convs_) x = relu(conv(bilinear_upsample(x, 2)));
    x = head_final_(x);  // (1, 1, H, W)
    return reshape(x, {x.shape()[2], x.shape()[3]});
}

DetectorOutput Detector::forward(const Image& image) const {
    Tensor f = freq::frequency_representation(image, freq::HighPassConfig{cfg_.alpha});
    PatchSequence seq = patch_embed(image);
    Tensor a_freq = frequency_attention(f);
    DetectorOutput out;
    Tensor t = encoder_stack(seq, a_freq, &out.dual_attention);
    Tensor e = patch_similarity(t);  // (h, w)
    Tensor f_edge = add(t, reshape(e, {1, e.shape()[0], e.shape()[1]}));
    out.mask_logits = upsample_head(f_edge);
    out.mask_prob = sigmoid(out.mask_logits);
    out.edge_map = e;
    out.feature_map = hwc(t);
    return out;
}

}  // namespace ftdr::detect
