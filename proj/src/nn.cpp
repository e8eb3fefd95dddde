#include "ftdr/nn.hpp"

namespace ftdr::nn {

Conv2d::Conv2d(ParamStore& ps, const std::string& name, int in_c, int out_c, int k, int stride,
               int padding, SplitMix64& rng, int dilation, bool bias)
    : stride(stride), padding(padding), dilation(dilation) {
    int fan_in = in_c * k * k;
    w = ps.create(name + ".w", Tensor::kaiming({out_c, in_c, k, k}, fan_in, rng));
    w.set_requires_grad(true);
    if (bias) {
        b = ps.create(name + ".b", Tensor::zeros({out_c}));
        b.set_requires_grad(true);
    }
}

Deconv2d::Deconv2d(ParamStore& ps, const std::string& name, int in_c, int out_c, int k,
                   int stride, int padding, SplitMix64& rng, bool bias)
    : stride(stride), padding(padding) {
    int fan_in = in_c * k * k;
    w = ps.create(name + ".w", Tensor::kaiming({in_c, out_c, k, k}, fan_in, rng));
    w.set_requires_grad(true);
    if (bias) {
        b = ps.create(name + ".b", Tensor::zeros({out_c}));
        b.set_requires_grad(true);
    }
}

Linear::Linear(ParamStore& ps, const std::string& name, int in_dim, int out_dim, SplitMix64& rng,
               bool bias) {
    w = ps.create(name + ".w", Tensor::kaiming({in_dim, out_dim}, in_dim, rng));
    w.set_requires_grad(true);
    if (bias) {
        b = ps.create(name + ".b", Tensor::zeros({out_dim}));
        b.set_requires_grad(true);
    }
}

}  // namespace ftdr::nn
