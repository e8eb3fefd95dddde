#include "ftdr/param_store.hpp"

#include <cmath>

namespace ftdr {

void ParamStore::load_values(const ParamStore& src) {
    for (const auto& [name, t] : src.items()) {
        Tensor dst = get(name);
        if (dst.shape() != t.shape())
            throw ShapeError("parameter shape mismatch for " + name);
        dst.vec() = t.vec();
    }
}

void adam_step(ParamStore& params, ParamStore& state, double lr, double beta1, double beta2,
               double eps, int t) {
    if (t < 1) throw ContractError("adam_step requires t >= 1");
    double bc1 = 1.0 - std::pow(beta1, t);
    double bc2 = 1.0 - std::pow(beta2, t);
    for (auto& [name, p] : params.items()) {
        if (!p.requires_grad()) continue;
        Tensor m = state.get_or_create(name + ".m", p.shape());
        Tensor v = state.get_or_create(name + ".v", p.shape());
        const std::vector<double>& g = p.grad();
        if (g.empty()) continue;
        double* pm = m.data();
        double* pv = v.data();
        double* pp = p.data();
        int64_t n = p.numel();
        for (int64_t i = 0; i < n; ++i) {
            pm[i] = beta1 * pm[i] + (1.0 - beta1) * g[static_cast<size_t>(i)];
            pv[i] = beta2 * pv[i] + (1.0 - beta2) * g[static_cast<size_t>(i)] * g[static_cast<size_t>(i)];
            double mhat = pm[i] / bc1;
            double vhat = pv[i] / bc2;
            pp[i] -= lr * mhat / (std::sqrt(vhat) + eps);
        }
    }
}

}  // namespace ftdr
