#pragma once

#include <vector>

#include "ftdr/image.hpp"
#include "ftdr/landmarks.hpp"
#include "ftdr/nn.hpp"

namespace ftdr::inpaint {

struct GeneratorConfig {
    int channels0 = 64;   // full resolution
    int channels1 = 128;  // 1/2
    int channels2 = 256;  // 1/4 (bottleneck)
    int res_blocks = 7;
    std::vector<int> dilations = {1, 2, 4, 8, 4, 2, 1};
    int attention_heads_dim = 8;  // channel divisor for long-short q/k
    int landmark_channels = 68;   // 1 = single collapsed conditioning map
};

struct FeaturePyramid {
    Tensor full;          // (c0, H, W)
    Tensor half;          // (c1, H/2, W/2)
    Tensor quarter;       // (c2, H/4, W/4) pre-residual features
    Tensor residual_out;  // (c2, H/4, W/4) after the dilated residual blocks
    Tensor bottleneck;    // (c2, H/4, W/4) after long-short attention
};

// Masks resized (nearest-neighbor) to each decoder level.
struct MaskPyramid {
    BinaryMask full;  // (H, W)
    BinaryMask half;  // (H/2, W/2)
    static MaskPyramid build(const BinaryMask& mask);
};

// a*m + b*(1-m); m broadcasts over leading channel axes.
Tensor mask_select(const Tensor& a, const Tensor& b, const Tensor& m);

// Standardizes the masked and unmasked regions of x independently per channel
// (epsilon 1e-5, biased variance); empty regions pass through. gamma/beta,
// when defined, apply a per-channel affine afterwards.
Tensor region_normalize(const Tensor& x, const BinaryMask& m, const Tensor& gamma = {},
                        const Tensor& beta = {});

// Spatial self-attention over `post` plus attention-weighted injection of
// `pre`, summed residually onto `post`.
class LongShortAttention {
  public:
    LongShortAttention() = default;
    LongShortAttention(ParamStore& ps, const std::string& name, int channels, int qk_div,
                       SplitMix64& rng);
    Tensor operator()(const Tensor& pre, const Tensor& post) const;

    nn::Conv2d out_long, out_short;  // exposed so tests can zero them

  private:
    nn::Conv2d q_, k_, v_long_, v_short_;
};

// Top-Down Refinement Block: deconv-upsampled decoder features are gated
// against encoder skips by the mask, region-normalized, then refined.
class Tdrb {
  public:
    Tdrb() = default;
    Tdrb(ParamStore& ps, const std::string& name, int in_c, int out_c, int deconv_stride,
         SplitMix64& rng);
    // fused_out, when given, receives the pre-1x1-conv gated tensor.
    Tensor operator()(const Tensor& phi_d, const Tensor& phi_e, const BinaryMask& m,
                      Tensor* fused_out = nullptr) const;

  private:
    nn::Deconv2d up_;
    nn::Conv2d fuse_, refine_;
    Tensor gamma_, beta_;
};

class Generator {
  public:
    Generator(ParamStore& ps, const GeneratorConfig& cfg, SplitMix64& rng);

    // i_m_bin (H,W,3), mask (H,W) (binary, or soft during joint training),
    // landmarks as (K,H,W). Returns pyramid + bottleneck.
    FeaturePyramid encode(const Image& i_m_bin, const Tensor& mask,
                          const LandmarkMap& lm) const;

    // Full restoration: encode, three TDRBs, tanh output mapped to [0,1],
    // composited so unmasked pixels equal the input exactly.
    Image generate(const Image& i_m_bin, const Tensor& mask, const LandmarkMap& lm,
                   Tensor* raw_out = nullptr) const;

    const GeneratorConfig& config() const { return cfg_; }

  private:
    GeneratorConfig cfg_;
    nn::Conv2d stem_, down1_, down2_;
    struct ResBlock {
        nn::Conv2d c1, c2;
    };
    std::vector<ResBlock> blocks_;
    LongShortAttention attention_;
    Tdrb tdrb1_, tdrb2_, tdrb3_;
    nn::Conv2d to_rgb_;
};

}  // namespace ftdr::inpaint
