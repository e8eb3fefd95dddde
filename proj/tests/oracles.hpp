#pragma once

// Independent reference computations for test expectations. Everything here
// is deliberately written the slow, obvious way and never calls into the
// implementation paths it is used to check.

#include <cmath>
#include <functional>
#include <vector>

#include "ftdr/tensor.hpp"

namespace oracle {

// Element indices to probe: everything when the tensor is small, an evenly
// strided sample otherwise (finite differences re-run the forward per probe).
inline std::vector<int64_t> probe_indices(int64_t numel, int64_t max_checks) {
    std::vector<int64_t> idx;
    if (max_checks <= 0 || numel <= max_checks) {
        for (int64_t i = 0; i < numel; ++i) idx.push_back(i);
    } else {
        for (int64_t k = 0; k < max_checks; ++k) idx.push_back(k * numel / max_checks);
    }
    return idx;
}

inline double rel_err(double a, double b) {
    double denom = std::max({std::fabs(a), std::fabs(b), 1e-5});
    return std::fabs(a - b) / denom;
}

// Backward-vs-central-finite-difference (h = 1e-5) check of loss = forward();
// returns the max relative error over the probed elements of every tensor in
// `wrt`.
inline double gradcheck(const std::function<ftdr::Tensor()>& forward,
                        std::vector<ftdr::Tensor> wrt, double h = 1e-5,
                        int64_t max_checks_per_tensor = 0) {
    auto& graph = ftdr::Graph::current();
    graph.clear();
    for (auto& t : wrt) {
        t.set_requires_grad(true);
        t.zero_grad();
    }
    ftdr::Tensor loss = forward();
    graph.backward(loss);
    double worst = 0.0;
    for (auto& t : wrt) {
        std::vector<double> analytic = t.grad();
        if (analytic.empty()) analytic.assign(static_cast<size_t>(t.numel()), 0.0);
        auto eval = [&]() {
            ftdr::NoGradGuard ng;
            return forward().value();
        };
        for (int64_t i : probe_indices(t.numel(), max_checks_per_tensor)) {
            double saved = t[i];
            t[i] = saved + h;
            double fp = eval();
            t[i] = saved - h;
            double fm = eval();
            t[i] = saved;
            double numeric = (fp - fm) / (2.0 * h);
            worst = std::max(worst, rel_err(analytic[static_cast<size_t>(i)], numeric));
        }
    }
    graph.clear();
    return worst;
}

// Naive O(H^2 W^2) orthonormal 2-D DCT-II, straight from the double sum.
inline std::vector<double> naive_dct2(const std::vector<double>& x, int H, int W) {
    std::vector<double> out(static_cast<size_t>(H) * W, 0.0);
    for (int u = 0; u < H; ++u) {
        double au = std::sqrt((u == 0 ? 1.0 : 2.0) / H);
        for (int v = 0; v < W; ++v) {
            double av = std::sqrt((v == 0 ? 1.0 : 2.0) / W);
            double acc = 0.0;
            for (int h = 0; h < H; ++h)
                for (int w = 0; w < W; ++w)
                    acc += x[static_cast<size_t>(h) * W + w] *
                           std::cos(M_PI * (2.0 * h + 1.0) * u / (2.0 * H)) *
                           std::cos(M_PI * (2.0 * w + 1.0) * v / (2.0 * W));
            out[static_cast<size_t>(u) * W + v] = au * av * acc;
        }
    }
    return out;
}

inline std::vector<double> naive_idct2(const std::vector<double>& c, int H, int W) {
    std::vector<double> out(static_cast<size_t>(H) * W, 0.0);
    for (int h = 0; h < H; ++h)
        for (int w = 0; w < W; ++w) {
            double acc = 0.0;
            for (int u = 0; u < H; ++u) {
                double au = std::sqrt((u == 0 ? 1.0 : 2.0) / H);
                for (int v = 0; v < W; ++v) {
                    double av = std::sqrt((v == 0 ? 1.0 : 2.0) / W);
                    acc += au * av * c[static_cast<size_t>(u) * W + v] *
                           std::cos(M_PI * (2.0 * h + 1.0) * u / (2.0 * H)) *
                           std::cos(M_PI * (2.0 * w + 1.0) * v / (2.0 * W));
                }
            }
            out[static_cast<size_t>(h) * W + w] = acc;
        }
    return out;
}

// Largest singular value of a rows x cols matrix via power iteration on W^T W.
inline double largest_singular_value(const std::vector<double>& w, int rows, int cols,
                                     int iters = 200) {
    std::vector<double> v(static_cast<size_t>(cols), 1.0 / std::sqrt(static_cast<double>(cols)));
    std::vector<double> wv(static_cast<size_t>(rows)), gv(static_cast<size_t>(cols));
    double lambda = 0.0;
    for (int it = 0; it < iters; ++it) {
        for (int i = 0; i < rows; ++i) {
            double acc = 0.0;
            for (int j = 0; j < cols; ++j) acc += w[static_cast<size_t>(i) * cols + j] * v[static_cast<size_t>(j)];
            wv[static_cast<size_t>(i)] = acc;
        }
        for (int j = 0; j < cols; ++j) {
            double acc = 0.0;
            for (int i = 0; i < rows; ++i) acc += w[static_cast<size_t>(i) * cols + j] * wv[static_cast<size_t>(i)];
            gv[static_cast<size_t>(j)] = acc;
        }
        double norm = 0.0;
        for (double z : gv) norm += z * z;
        norm = std::sqrt(norm);
        if (norm == 0.0) return 0.0;
        lambda = 0.0;
        for (int j = 0; j < cols; ++j) {
            lambda += v[static_cast<size_t>(j)] * gv[static_cast<size_t>(j)];
            v[static_cast<size_t>(j)] = gv[static_cast<size_t>(j)] / norm;
        }
    }
    return std::sqrt(std::max(0.0, lambda));
}

// Extreme eigenvalues of a symmetric n x n matrix by power iteration and a
// spectral shift.
inline std::pair<double, double> symmetric_eig_bounds(const std::vector<double>& m, int n,
                                                      int iters = 500) {
    auto power = [&](const std::function<void(const double*, double*)>& apply) {
        std::vector<double> v(static_cast<size_t>(n), 1.0 / std::sqrt(static_cast<double>(n)));
        std::vector<double> av(static_cast<size_t>(n));
        double lambda = 0.0;
        for (int it = 0; it < iters; ++it) {
            apply(v.data(), av.data());
            double norm = 0.0;
            for (double z : av) norm += z * z;
            norm = std::sqrt(norm);
            if (norm == 0.0) return 0.0;
            lambda = 0.0;
            for (int i = 0; i < n; ++i) lambda += v[static_cast<size_t>(i)] * av[static_cast<size_t>(i)];
            for (int i = 0; i < n; ++i) v[static_cast<size_t>(i)] = av[static_cast<size_t>(i)] / norm;
        }
        return lambda;
    };
    auto mul = [&](const double* v, double* out) {
        for (int i = 0; i < n; ++i) {
            double acc = 0.0;
            for (int j = 0; j < n; ++j) acc += m[static_cast<size_t>(i) * n + j] * v[j];
            out[i] = acc;
        }
    };
    // Bound on |lambda| so the shifted matrix is PSD.
    double bound = 0.0;
    for (int i = 0; i < n; ++i) {
        double row = 0.0;
        for (int j = 0; j < n; ++j) row += std::fabs(m[static_cast<size_t>(i) * n + j]);
        bound = std::max(bound, row);
    }
    double mu_hi = power([&](const double* v, double* out) {
        mul(v, out);
        for (int i = 0; i < n; ++i) out[i] += bound * v[i];
    });
    double lambda_max = mu_hi - bound;
    double mu_lo = power([&](const double* v, double* out) {
        mul(v, out);
        for (int i = 0; i < n; ++i) out[i] = bound * v[i] - out[i];
    });
    double lambda_min = bound - mu_lo;
    return {lambda_max, lambda_min};
}

}  // namespace oracle
