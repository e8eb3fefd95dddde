#pragma once

#include <vector>

#include "ftdr/frequency.hpp"
#include "ftdr/image.hpp"
#include "ftdr/nn.hpp"

namespace ftdr::detect {

// Transformer-based mask detector. The image is split into an 8x8 grid of
// patches; each token is the flattened per-pixel embedding of its patch
// (Q = (H/8)*(W/8)*embed_channels). Attention projections act per channel and
// are shared across patch sites, keeping the token width as specified without
// quadratic-in-Q parameter counts.
struct DetectorConfig {
    int image_size = 256;   // square input, divisible by 8*grid
    int grid = 8;           // patch grid side; P = grid*grid = 64
    int embed_channels = 64;
    int stem_channels = 32;
    int layers = 4;         // L
    int heads = 4;          // N_h
    int mlp_hidden = 128;
    int freq_channels = 2;  // C of the frequency attention
    int freq_descriptor = 32;
    double alpha = 0.08;    // high-pass threshold
    std::vector<int> head_channels = {32, 16, 8};

    int patches() const { return grid * grid; }
    int patch_px() const { return image_size / grid; }
    int sites_per_patch() const { return patch_px() * patch_px(); }
    int token_dim() const { return sites_per_patch() * embed_channels; }  // Q
};

struct PatchSequence {
    Tensor embeddings;  // (P, Q)
    int rows = 0, cols = 0;
};

struct DetectorOutput {
    Tensor mask_logits;                 // (H, W)
    Tensor mask_prob;                   // (H, W), sigmoid of logits
    Tensor edge_map;                    // (h, w) = (H/8, W/8)
    Tensor feature_map;                 // (h, w, embed_channels) = T
    std::vector<Tensor> dual_attention; // per layer, (N_h, P, P)
};

// A = softmax(q k^T / sqrt(d_k)) for one head; q, k are (P, d_k).
Tensor scaled_dot_attention(const Tensor& q, const Tensor& k);

// Eq.-6 fusion: softmax over rows of a 1x1 "conv" (channel mix) of
// [A ; A_freq]. w is (N_h+C, N_h), b is (N_h) or undefined.
Tensor dual_attention(const Tensor& attn, const Tensor& attn_freq, const Tensor& w,
                      const Tensor& b);

// Mean cosine similarity of each feature vector with its valid 3x3
// neighborhood (self included, borders shrink the neighborhood).
// T is (C, h, w); returns (h, w) in [-1, 1]. Zero-norm vectors contribute 0.
Tensor patch_similarity(const Tensor& feature_map);

// BCE (probabilities clamped to [1e-6, 1-1e-6]) plus dice.
Tensor detection_loss(const Tensor& mask_prob, const BinaryMask& gt);

class Detector {
  public:
    Detector(ParamStore& ps, const DetectorConfig& cfg, SplitMix64& rng);

    PatchSequence patch_embed(const Image& image) const;
    // F (H, W, 1) -> (C, P, P) bilinear pairwise scores of patch descriptors.
    Tensor frequency_attention(const Tensor& f) const;
    // Runs L encoder layers and reassembles the sequence into T (C, h, w).
    Tensor encoder_stack(const PatchSequence& seq, const Tensor& attn_freq,
                         std::vector<Tensor>* dual_maps = nullptr) const;
    // (C, h, w) edge-enhanced features -> full-resolution logits (H, W).
    Tensor upsample_head(const Tensor& f_edge) const;

    DetectorOutput forward(const Image& image) const;

    const DetectorConfig& config() const { return cfg_; }

  private:
    DetectorConfig cfg_;
    nn::Conv2d stem1_, stem2_;
    Tensor pos_encoding_;  // (P, Q), fixed sinusoidal
    struct Layer {
        std::vector<nn::Linear> wq, wk, wv;  // per head, channelwise
        nn::Linear dual;                     // (N_h + C) -> N_h channel mix
        nn::Linear out_proj;
        nn::Linear mlp1, mlp2;
    };
    std::vector<Layer> layers_;
    std::vector<nn::Conv2d> freq_tower_;
    Tensor freq_bilinear_;  // (C, D, D) scoring forms
    nn::Conv2d reassemble_;
    std::vector<nn::Conv2d> head_convs_;
    nn::Conv2d head_final_;
};

}  // namespace ftdr::detect
