#pragma once

#include <string>
#include <vector>

#include "ftdr/image.hpp"
#include "ftdr/nn.hpp"

namespace ftdr::loss {

// Frozen five-stage conv tower standing in for a pretrained perceptual
// backbone. Weights are seeded and never trained; each stage halves the
// spatial resolution.
class FeatureExtractor {
  public:
    explicit FeatureExtractor(uint64_t seed = 400);

    // Five taps (1, C_p, H_p, W_p) for an (H, W, C) image, C in {1, 3}.
    std::vector<Tensor> features(const Image& image) const;
    // Globally average-pooled deepest tap, as a flat (C5) vector.
    Tensor deepest_descriptor(const Image& image) const;

    int stages() const { return static_cast<int>(convs_.size()); }

  private:
    void calibrate_descriptor(uint64_t seed);

    ParamStore params_;
    std::vector<nn::Conv2d> convs_;
    Tensor descriptor_mean_;               // calibration mean of the pooled deepest tap
    std::vector<Tensor> descriptor_modes_; // deflated dominant calibration modes
};

struct LossWeights {
    double recons = 1.0;
    double adv = 0.01;
    double perc = 0.1;
    double style = 250.0;
    double tv = 0.1;

    // "celeba_hq" (recons 1) or "celeba" (recons 5).
    static LossWeights preset(const std::string& name);
};

// Mean L1 over masked elements (mask broadcast across channels); 0 when the
// mask is empty.
Tensor reconstruction_loss(const Image& pred, const Image& gt, const Tensor& mask);

Tensor perceptual_loss(const Image& pred, const Image& gt, const FeatureExtractor& fx);

// Gram-matrix distance of masked inputs, with the double normalization
// (1/N_p^2 outside, 1/(N_p H_p W_p) inside the norm).
Tensor style_loss(const Image& pred, const Image& gt, const Tensor& mask,
                  const FeatureExtractor& fx);

// Mean L1 of forward differences, normalized by element count.
Tensor tv_loss(const Image& pred);

Tensor total_loss(const Tensor& recons, const Tensor& adv_g, const Tensor& perc,
                  const Tensor& style, const Tensor& tv, const LossWeights& w);

}  // namespace ftdr::loss
