#include <algorithm>
#include <cmath>
#include <vector>

#include "ftdr/tensor.hpp"

namespace ftdr {

namespace {

struct ConvGeom {
    int C, kH, kW;       // patch channels and kernel extent
    int H, W;            // image plane the patches are gathered from / scattered to
    int OH, OW;          // patch grid
    int stride, pad, dil;
};

// col is (C*kH*kW) x (OH*OW); out-of-range taps read as zero.
void im2col(const double* img, double* col, const ConvGeom& g) {
    for (int c = 0; c < g.C; ++c) {
        const double* ic = img + static_cast<size_t>(c) * g.H * g.W;
        for (int kh = 0; kh < g.kH; ++kh) {
            for (int kw = 0; kw < g.kW; ++kw) {
                double* row =
                    col + (static_cast<size_t>(c) * g.kH * g.kW + kh * g.kW + kw) *
                              (static_cast<size_t>(g.OH) * g.OW);
                for (int oh = 0; oh < g.OH; ++oh) {
                    int ih = oh * g.stride - g.pad + kh * g.dil;
                    double* r = row + static_cast<size_t>(oh) * g.OW;
                    if (ih < 0 || ih >= g.H) {
                        std::fill(r, r + g.OW, 0.0);
                        continue;
                    }
                    const double* src = ic + static_cast<size_t>(ih) * g.W;
                    for (int ow = 0; ow < g.OW; ++ow) {
                        int iw = ow * g.stride - g.pad + kw * g.dil;
                        r[ow] = (iw >= 0 && iw < g.W) ? src[iw] : 0.0;
                    }
                }
            }
        }
    }
}

void col2im_add(const double* col, double* img, const ConvGeom& g) {
    for (int c = 0; c < g.C; ++c) {
        double* ic = img + static_cast<size_t>(c) * g.H * g.W;
        for (int kh = 0; kh < g.kH; ++kh) {
            for (int kw = 0; kw < g.kW; ++kw) {
                const double* row =
                    col + (static_cast<size_t>(c) * g.kH * g.kW + kh * g.kW + kw) *
                              (static_cast<size_t>(g.OH) * g.OW);
                for (int oh = 0; oh < g.OH; ++oh) {
                    int ih = oh * g.stride - g.pad + kh * g.dil;
                    if (ih < 0 || ih >= g.H) continue;
                    const double* r = row + static_cast<size_t>(oh) * g.OW;
                    double* dst = ic + static_cast<size_t>(ih) * g.W;
                    for (int ow = 0; ow < g.OW; ++ow) {
                        int iw = ow * g.stride - g.pad + kw * g.dil;
                        if (iw >= 0 && iw < g.W) dst[iw] += r[ow];
                    }
                }
            }
        }
    }
}

bool want_grad_conv(const Tensor& x, const Tensor& w, const Tensor& b) {
    if (!Graph::current().recording()) return false;
    return x.requires_grad() || w.requires_grad() || (b.defined() && b.requires_grad());
}

int conv_out_extent(int in, int k, int stride, int pad, int dil, const char* axis) {
    int span = in + 2 * pad - dil * (k - 1) - 1;
    if (span < 0 || span % stride != 0)
        throw ShapeError(std::string("conv output extent on axis ") + axis +
                         " is not a positive integer: in=" + std::to_string(in) +
                         " k=" + std::to_string(k) + " stride=" + std::to_string(stride) +
                         " pad=" + std::to_string(pad) + " dil=" + std::to_string(dil));
    return span / stride + 1;
}

}  // namespace

Tensor conv2d(const Tensor& input, const Tensor& weight, const Tensor& bias, int stride,
              int padding, int dilation) {
    if (input.rank() != 4) throw ShapeError("conv2d input must be (N,C,H,W), axis count wrong");
    if (weight.rank() != 4) throw ShapeError("conv2d weight must be (O,C,kH,kW)");
    if (stride < 1 || dilation < 1) throw ContractError("conv2d stride and dilation must be >= 1");
    int N = input.shape()[0], C = input.shape()[1], H = input.shape()[2], W = input.shape()[3];
    int O = weight.shape()[0], kH = weight.shape()[2], kW = weight.shape()[3];
    if (weight.shape()[1] != C)
        throw ShapeError("conv2d channel mismatch at axis 1: input C=" + std::to_string(C) +
                         " weight C=" + std::to_string(weight.shape()[1]));
    if (bias.defined() && (bias.rank() != 1 || bias.shape()[0] != O))
        throw ShapeError("conv2d bias must be (O) at axis 0");
    int OH = conv_out_extent(H, kH, stride, padding, dilation, "2 (H)");
    int OW = conv_out_extent(W, kW, stride, padding, dilation, "3 (W)");

    ConvGeom g{C, kH, kW, H, W, OH, OW, stride, padding, dilation};
    int ckk = C * kH * kW;
    int64_t plane = static_cast<int64_t>(OH) * OW;

    Tensor out({N, O, OH, OW});
    std::vector<double> col(static_cast<size_t>(ckk) * plane);
    for (int n = 0; n < N; ++n) {
        im2col(input.data() + static_cast<size_t>(n) * C * H * W, col.data(), g);
        double* on = out.data() + static_cast<size_t>(n) * O * plane;
        detail::mm_nn(weight.data(), col.data(), on, O, ckk, static_cast<int>(plane), false);
        if (bias.defined())
            for (int o = 0; o < O; ++o) {
                double b = bias[o];
                double* row = on + static_cast<size_t>(o) * plane;
                for (int64_t i = 0; i < plane; ++i) row[i] += b;
            }
    }

    if (want_grad_conv(input, weight, bias)) {
        out.set_requires_grad(true);
        auto xi = input.ptr(), wi = weight.ptr(), oi = out.ptr();
        auto bi = bias.defined() ? bias.ptr() : nullptr;
        Graph::current().record("conv2d", oi, [=]() {
            std::vector<double> colbuf(static_cast<size_t>(ckk) * plane);
            std::vector<double> dcol(static_cast<size_t>(ckk) * plane);
            bool need_x = xi->requires_grad;
            bool need_w = wi->requires_grad;
            bool need_b = bi && bi->requires_grad;
            if (need_x && xi->grad.empty()) xi->grad.assign(xi->data.size(), 0.0);
            if (need_w && wi->grad.empty()) wi->grad.assign(wi->data.size(), 0.0);
            if (need_b && bi->grad.empty()) bi->grad.assign(bi->data.size(), 0.0);
            for (int n = 0; n < N; ++n) {
                const double* gout = oi->grad.data() + static_cast<size_t>(n) * O * plane;
                if (need_w || need_x)
                    im2col(xi->data.data() + static_cast<size_t>(n) * C * H * W, colbuf.data(), g);
                if (need_w)
                    detail::mm_nt(gout, colbuf.data(), wi->grad.data(), O,
                                  static_cast<int>(plane), ckk, true);
                if (need_x) {
                    detail::mm_tn(wi->data.data(), gout, dcol.data(), ckk, O,
                                  static_cast<int>(plane), false);
                    col2im_add(dcol.data(), xi->grad.data() + static_cast<size_t>(n) * C * H * W,
                               g);
                }
                if (need_b)
                    for (int o = 0; o < O; ++o) {
                        const double* row = gout + static_cast<size_t>(o) * plane;
                        double acc = 0.0;
                        for (int64_t i = 0; i < plane; ++i) acc += row[i];
                        bi->grad[static_cast<size_t>(o)] += acc;
                    }
            }
        });
    }
    return out;
}

Tensor deconv2d(const Tensor& input, const Tensor& weight, const Tensor& bias, int stride,
                int padding) {
    if (input.rank() != 4) throw ShapeError("deconv2d input must be (N,C,H,W)");
    if (weight.rank() != 4) throw ShapeError("deconv2d weight must be (C,O,kH,kW)");
    if (stride < 1) throw ContractError("deconv2d stride must be >= 1");
    int N = input.shape()[0], C = input.shape()[1], H = input.shape()[2], W = input.shape()[3];
    int O = weight.shape()[1], kH = weight.shape()[2], kW = weight.shape()[3];
    if (weight.shape()[0] != C)
        throw ShapeError("deconv2d channel mismatch at axis 0: input C=" + std::to_string(C) +
                         " weight C=" + std::to_string(weight.shape()[0]));
    if (bias.defined() && (bias.rank() != 1 || bias.shape()[0] != O))
        throw ShapeError("deconv2d bias must be (O)");
    int OH = (H - 1) * stride - 2 * padding + kH;
    int OW = (W - 1) * stride - 2 * padding + kW;
    if (OH <= 0 || OW <= 0)
        throw ShapeError("deconv2d output extent non-positive on axis 2/3");

    // Scatter geometry: patch grid is the deconv *input* plane, image plane is
    // the deconv *output*.
    ConvGeom g{O, kH, kW, OH, OW, H, W, stride, padding, 1};
    int okk = O * kH * kW;
    int64_t in_plane = static_cast<int64_t>(H) * W;
    int64_t out_plane = static_cast<int64_t>(OH) * OW;

    Tensor out({N, O, OH, OW}, 0.0);
    std::vector<double> col(static_cast<size_t>(okk) * in_plane);
    for (int n = 0; n < N; ++n) {
        // col = weight^T(okk x C) * x(C x HW)
        detail::mm_tn(weight.data(), input.data() + static_cast<size_t>(n) * C * in_plane,
                      col.data(), okk, C, static_cast<int>(in_plane), false);
        double* on = out.data() + static_cast<size_t>(n) * O * out_plane;
        col2im_add(col.data(), on, g);
        if (bias.defined())
            for (int o = 0; o < O; ++o) {
                double b = bias[o];
                double* row = on + static_cast<size_t>(o) * out_plane;
                for (int64_t i = 0; i < out_plane; ++i) row[i] += b;
            }
    }

    if (want_grad_conv(input, weight, bias)) {
        out.set_requires_grad(true);
        auto xi = input.ptr(), wi = weight.ptr(), oi = out.ptr();
        auto bi = bias.defined() ? bias.ptr() : nullptr;
        Graph::current().record("deconv2d", oi, [=]() {
            bool need_x = xi->requires_grad;
            bool need_w = wi->requires_grad;
            bool need_b = bi && bi->requires_grad;
            if (need_x && xi->grad.empty()) xi->grad.assign(xi->data.size(), 0.0);
            if (need_w && wi->grad.empty()) wi->grad.assign(wi->data.size(), 0.0);
            if (need_b && bi->grad.empty()) bi->grad.assign(bi->data.size(), 0.0);
            std::vector<double> colD(static_cast<size_t>(okk) * in_plane);
            for (int n = 0; n < N; ++n) {
                const double* gout = oi->grad.data() + static_cast<size_t>(n) * O * out_plane;
                if (need_x || need_w) im2col(gout, colD.data(), g);
                if (need_x)
                    detail::mm_nn(wi->data.data(), colD.data(),
                                  xi->grad.data() + static_cast<size_t>(n) * C * in_plane, C, okk,
                                  static_cast<int>(in_plane), true);
                if (need_w)
                    detail::mm_nt(xi->data.data() + static_cast<size_t>(n) * C * in_plane,
                                  colD.data(), wi->grad.data(), C, static_cast<int>(in_plane),
                                  okk, true);
                if (need_b)
                    for (int o = 0; o < O; ++o) {
                        const double* row = gout + static_cast<size_t>(o) * out_plane;
                        double acc = 0.0;
                        for (int64_t i = 0; i < out_plane; ++i) acc += row[i];
                        bi->grad[static_cast<size_t>(o)] += acc;
                    }
            }
        });
    }
    return out;
}

Tensor bilinear_upsample(const Tensor& a, int factor) {
    if (a.rank() != 4) throw ShapeError("bilinear_upsample input must be (N,C,H,W)");
    if (factor < 1) throw ContractError("bilinear_upsample factor must be >= 1");
    int N = a.shape()[0], C = a.shape()[1], H = a.shape()[2], W = a.shape()[3];
    int OH = H * factor, OW = W * factor;

    // Half-pixel sampling with clamped edges; weights sum to 1.
    struct Tap {
        int lo, hi;
        double t;
    };
    auto taps = [&](int out_extent, int in_extent, int f) {
        std::vector<Tap> v(static_cast<size_t>(out_extent));
        for (int i = 0; i < out_extent; ++i) {
            double s = (i + 0.5) / f - 0.5;
            int lo = static_cast<int>(std::floor(s));
            double t = s - lo;
            int hi = lo + 1;
            lo = std::clamp(lo, 0, in_extent - 1);
            hi = std::clamp(hi, 0, in_extent - 1);
            v[static_cast<size_t>(i)] = {lo, hi, t};
        }
        return v;
    };
    auto ty = taps(OH, H, factor);
    auto tx = taps(OW, W, factor);

    Tensor out({N, C, OH, OW});
    const double* pa = a.data();
    double* po = out.data();
    for (int nc = 0; nc < N * C; ++nc) {
        const double* in = pa + static_cast<size_t>(nc) * H * W;
        double* o = po + static_cast<size_t>(nc) * OH * OW;
        for (int y = 0; y < OH; ++y) {
            const Tap& a_y = ty[static_cast<size_t>(y)];
            const double* r0 = in + static_cast<size_t>(a_y.lo) * W;
            const double* r1 = in + static_cast<size_t>(a_y.hi) * W;
            double* orow = o + static_cast<size_t>(y) * OW;
            for (int x = 0; x < OW; ++x) {
                const Tap& a_x = tx[static_cast<size_t>(x)];
                double top = r0[a_x.lo] * (1.0 - a_x.t) + r0[a_x.hi] * a_x.t;
                double bot = r1[a_x.lo] * (1.0 - a_x.t) + r1[a_x.hi] * a_x.t;
                orow[x] = top * (1.0 - a_y.t) + bot * a_y.t;
            }
        }
    }

    if (Graph::current().recording() && a.requires_grad()) {
        out.set_requires_grad(true);
        auto ai = a.ptr(), oi = out.ptr();
        Graph::current().record("bilinear_upsample", oi, [=]() {
            if (ai->grad.empty()) ai->grad.assign(ai->data.size(), 0.0);
            const double* g = oi->grad.data();
            double* ga = ai->grad.data();
            for (int nc = 0; nc < N * C; ++nc) {
                double* gi = ga + static_cast<size_t>(nc) * H * W;
                const double* go = g + static_cast<size_t>(nc) * OH * OW;
                for (int y = 0; y < OH; ++y) {
                    const Tap& a_y = ty[static_cast<size_t>(y)];
                    for (int x = 0; x < OW; ++x) {
                        const Tap& a_x = tx[static_cast<size_t>(x)];
                        double gv = go[static_cast<size_t>(y) * OW + x];
                        gi[static_cast<size_t>(a_y.lo) * W + a_x.lo] +=
                            gv * (1.0 - a_y.t) * (1.0 - a_x.t);
                        gi[static_cast<size_t>(a_y.lo) * W + a_x.hi] += gv * (1.0 - a_y.t) * a_x.t;
                        gi[static_cast<size_t>(a_y.hi) * W + a_x.lo] += gv * a_y.t * (1.0 - a_x.t);
                        gi[static_cast<size_t>(a_y.hi) * W + a_x.hi] += gv * a_y.t * a_x.t;
                    }
                }
            }
        });
    }
    return out;
}

}  // namespace ftdr
