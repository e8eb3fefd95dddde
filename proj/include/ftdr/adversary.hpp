#pragma once

#include <utility>
#include <vector>

#include "ftdr/image.hpp"
#include "ftdr/landmarks.hpp"
#include "ftdr/nn.hpp"

namespace ftdr::gan {

// Power-iteration state for one weight (u over rows, v over columns of the
// (out, rest) matrix view).
struct SpectralState {
    Tensor u, v;
    static SpectralState init(const Tensor& weight, SplitMix64& rng);
};

// Runs `iters` power-iteration updates on (u, v), then returns w / sigma with
// sigma = u^T W v (u, v held constant for the gradient). Weights with
// sigma < 1e-12 pass through unchanged.
Tensor spectral_normalize(const Tensor& weight, SpectralState& state, int iters = 1);

// Estimate of the current largest singular value (20 verification iterations
// on a copy of the state).
double spectral_sigma(const Tensor& weight, const SpectralState& state, int iters = 20);

struct DiscriminatorConfig {
    int base_channels = 64;     // 64 -> 128 -> 256 -> 512 doubling schedule
    int landmark_channels = 68; // 1 = collapsed conditioning map
};

// 70x70-receptive-field PatchGAN: k4 convs with strides 2,2,2,1,1, all
// spectrally normalized, conditioned on the landmark map. A 256x256 input
// yields a 30x30 score map.
class Discriminator {
  public:
    Discriminator(ParamStore& ps, const DiscriminatorConfig& cfg, SplitMix64& rng);

    // image (H,W,3) + landmarks -> (h', w') patch scores. Mutates the
    // power-iteration state (one update per call while recording).
    Tensor operator()(const Image& image, const inpaint::LandmarkMap& lm);

    const DiscriminatorConfig& config() const { return cfg_; }
    std::vector<std::pair<Tensor, SpectralState>>& spectral_layers() { return layers_sn_; }

  private:
    DiscriminatorConfig cfg_;
    std::vector<nn::Conv2d> convs_;
    std::vector<std::pair<Tensor, SpectralState>> layers_sn_;  // weight handle + state
};

// Least-squares GAN objectives. With `standard` set (the default config) the
// discriminator pushes fake scores to 0; otherwise both terms target 1,
// matching the printed form of the paper's equation.
std::pair<Tensor, Tensor> lsgan_losses(const Tensor& d_fake, const Tensor& d_real,
                                       bool standard = true);

}  // namespace ftdr::gan
