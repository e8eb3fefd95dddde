#include "ftdr/adversary.hpp"

#include <cmath>

namespace ftdr::gan {

namespace {

void l2_normalize(std::vector<double>& v) {
    double n = 0.0;
    for (double x : v) n += x * x;
    n = std::sqrt(n);
    if (n < 1e-12) return;
    for (double& x : v) x /= n;
}

// One u/v update pair on the (rows, cols) view of w.
void power_iterate(const double* w, int rows, int cols, std::vector<double>& u,
                   std::vector<double>& v) {
    // v <- normalize(W^T u)
    for (int j = 0; j < cols; ++j) {
        double acc = 0.0;
        for (int i = 0; i < rows; ++i) acc += w[static_cast<size_t>(i) * cols + j] * u[static_cast<size_t>(i)];
        v[static_cast<size_t>(j)] = acc;
    }
    l2_normalize(v);
    // u <- normalize(W v)
    for (int i = 0; i < rows; ++i) {
        double acc = 0.0;
        for (int j = 0; j < cols; ++j) acc += w[static_cast<size_t>(i) * cols + j] * v[static_cast<size_t>(j)];
        u[static_cast<size_t>(i)] = acc;
    }
    l2_normalize(u);
}

double sigma_of(const double* w, int rows, int cols, const std::vector<double>& u,
                const std::vector<double>& v) {
    double s = 0.0;
    for (int i = 0; i < rows; ++i) {
        double acc = 0.0;
        for (int j = 0; j < cols; ++j) acc += w[static_cast<size_t>(i) * cols + j] * v[static_cast<size_t>(j)];
        s += u[static_cast<size_t>(i)] * acc;
    }
    return s;
}

}  // namespace

SpectralState SpectralState::init(const Tensor& weight, SplitMix64& rng) {
    int rows = weight.shape()[0];
    int cols = static_cast<int>(weight.numel() / rows);
    SpectralState st;
    st.u = Tensor::uniform({rows}, rng, -1.0, 1.0);
    st.v = Tensor::zeros({cols});
    std::vector<double> u(st.u.data(), st.u.data() + rows);
    std::vector<double> v(st.v.data(), st.v.data() + cols);
    l2_normalize(u);
    // warm up so a frozen (no-grad) forward already sees a sensible sigma
    for (int it = 0; it < 3; ++it) power_iterate(weight.data(), rows, cols, u, v);
    std::copy(u.begin(), u.end(), st.u.data());
    std::copy(v.begin(), v.end(), st.v.data());
    return st;
}

Tensor spectral_normalize(const Tensor& weight, SpectralState& state, int iters) {
    int rows = weight.shape()[0];
    int cols = static_cast<int>(weight.numel() / rows);
    std::vector<double> u(state.u.data(), state.u.data() + rows);
    std::vector<double> v(state.v.data(), state.v.data() + cols);
    // power-iteration state advances only while recording (training); no-grad
    // forwards see a frozen sigma
    if (Graph::current().recording()) {
        for (int it = 0; it < iters; ++it) power_iterate(weight.data(), rows, cols, u, v);
        std::copy(u.begin(), u.end(), state.u.data());
        std::copy(v.begin(), v.end(), state.v.data());
    }

    double sigma_hat = sigma_of(weight.data(), rows, cols, u, v);
    if (std::fabs(sigma_hat) < 1e-12) return weight;  // zero weight passes through

    // sigma = u^T W v rebuilt on the tape so gradients see the normalization
    Tensor w2 = reshape(weight, {rows, cols});
    Tensor vc({cols, 1}, v);
    Tensor uc({1, rows}, u);
    Tensor sigma = reshape(matmul(uc, matmul(w2, vc)), {1});
    return div(weight, sigma);
}

double spectral_sigma(const Tensor& weight, const SpectralState& state, int iters) {
    int rows = weight.shape()[0];
    int cols = static_cast<int>(weight.numel() / rows);
    std::vector<double> u(state.u.data(), state.u.data() + rows);
    std::vector<double> v(state.v.data(), state.v.data() + cols);
    for (int it = 0; it < iters; ++it) power_iterate(weight.data(), rows, cols, u, v);
    return sigma_of(weight.data(), rows, cols, u, v);
}

Discriminator::Discriminator(ParamStore& ps, const DiscriminatorConfig& cfg, SplitMix64& rng)
    : cfg_(cfg) {
    int in_c = 3 + cfg.landmark_channels;
    int c = cfg.base_channels;
    struct Spec {
        int out, stride;
    };
    std::vector<Spec> specs = {{c, 2}, {c * 2, 2}, {c * 4, 2}, {c * 8, 1}, {1, 1}};
    for (size_t i = 0; i < specs.size(); ++i) {
        convs_.emplace_back(ps, "disc.conv" + std::to_string(i), in_c, specs[i].out, 4,
                            specs[i].stride, 1, rng);
        layers_sn_.emplace_back(convs_.back().w, SpectralState::init(convs_.back().w, rng));
        in_c = specs[i].out;
    }
}

Tensor Discriminator::operator()(const Image& image, const inpaint::LandmarkMap& lm) {
    check_image(image, "discriminator input");
    if (image.shape()[2] != 3) throw ShapeError("discriminator expects an RGB image");
    int H = image.shape()[0], W = image.shape()[1];
    Tensor lm_chw = cfg_.landmark_channels == 1 ? inpaint::collapse_landmarks(lm) : lm.heatmap;
    if (lm_chw.shape()[0] != cfg_.landmark_channels || lm_chw.shape()[1] != H ||
        lm_chw.shape()[2] != W)
        throw ShapeError("discriminator landmark map does not match (K, H, W)");
    Tensor x = concat({chw(image), lm_chw}, 0);
    x = reshape(x, {1, x.shape()[0], H, W});
    for (size_t i = 0; i < convs_.size(); ++i) {
        auto& [w, state] = layers_sn_[i];
        Tensor wn = spectral_normalize(w, state);
        x = conv2d(x, wn, convs_[i].b, convs_[i].stride, convs_[i].padding);
        if (i + 1 < convs_.size()) x = relu(x);
    }
    return reshape(x, {x.shape()[2], x.shape()[3]});
}

std::pair<Tensor, Tensor> lsgan_losses(const Tensor& d_fake, const Tensor& d_real,
                                       bool standard) {
    auto sq_dist_to = [](const Tensor& t, double target) {
        Tensor d = add_scalar(t, -target);
        return mean(mul(d, d));
    };
    Tensor adv_g = sq_dist_to(d_fake, 1.0);
    Tensor fake_term = standard ? sq_dist_to(d_fake, 0.0) : sq_dist_to(d_fake, 1.0);
    Tensor adv_d = add(fake_term, sq_dist_to(d_real, 1.0));
    return {adv_g, adv_d};
}

}  // namespace ftdr::gan
