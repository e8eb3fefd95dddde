#pragma once

#include <string>

#include "ftdr/param_store.hpp"

namespace ftdr::nn {

// Thin layer wrappers: construction registers named parameters in a
// ParamStore (Kaiming-uniform weights, zero biases); the wrapper keeps shared
// handles so checkpoint restores are visible without rebinding.

struct Conv2d {
    Tensor w, b;
    int stride = 1, padding = 0, dilation = 1;

    Conv2d() = default;
    Conv2d(ParamStore& ps, const std::string& name, int in_c, int out_c, int k, int stride,
           int padding, SplitMix64& rng, int dilation = 1, bool bias = true);
    Tensor operator()(const Tensor& x) const { return conv2d(x, w, b, stride, padding, dilation); }
};

struct Deconv2d {
    Tensor w, b;
    int stride = 1, padding = 0;

    Deconv2d() = default;
    Deconv2d(ParamStore& ps, const std::string& name, int in_c, int out_c, int k, int stride,
             int padding, SplitMix64& rng, bool bias = true);
    Tensor operator()(const Tensor& x) const { return deconv2d(x, w, b, stride, padding); }
};

struct Linear {
    Tensor w, b;

    Linear() = default;
    Linear(ParamStore& ps, const std::string& name, int in_dim, int out_dim, SplitMix64& rng,
           bool bias = true);
    // x: (M, in) -> (M, out)
    Tensor operator()(const Tensor& x) const {
        Tensor y = matmul(x, w);
        return b.defined() ? add(y, b) : y;
    }
};

}  // namespace ftdr::nn
