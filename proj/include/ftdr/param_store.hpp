#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "ftdr/tensor.hpp"

namespace ftdr {

// Ordered map from hierarchical names ("encoder.conv1.weight") to tensors.
// Insertion order is preserved so checkpoints serialize deterministically.
class ParamStore {
  public:
    // Tensors are shared handles, so everything returns by value; mutating a
    // returned handle mutates the stored tensor.
    Tensor create(const std::string& name, Tensor t) {
        if (index_.count(name)) throw ContractError("parameter already exists: " + name);
        index_[name] = entries_.size();
        entries_.push_back({name, std::move(t)});
        return entries_.back().second;
    }

    bool contains(const std::string& name) const { return index_.count(name) != 0; }

    Tensor get(const std::string& name) const {
        auto it = index_.find(name);
        if (it == index_.end()) throw ContractError("unknown parameter: " + name);
        return entries_[it->second].second;
    }

    Tensor get_or_create(const std::string& name, const std::vector<int>& shape) {
        if (contains(name)) return get(name);
        return create(name, Tensor::zeros(shape));
    }

    std::vector<std::pair<std::string, Tensor>>& items() { return entries_; }
    const std::vector<std::pair<std::string, Tensor>>& items() const { return entries_; }
    size_t size() const { return entries_.size(); }

    void zero_grads() {
        for (auto& [name, t] : entries_) t.zero_grad();
    }

    // Overwrite values from another store (shapes must match); used by
    // checkpoint restore.
    void load_values(const ParamStore& src);

  private:
    std::vector<std::pair<std::string, Tensor>> entries_;
    std::unordered_map<std::string, size_t> index_;
};

// Adam with bias correction. Optimizer state (m, v) lives in `state` under
// "<param>.m" / "<param>.v" so it can be checkpointed like any store.
void adam_step(ParamStore& params, ParamStore& state, double lr, double beta1, double beta2,
               double eps, int t);

struct AdamConfig {
    double lr = 1e-4;
    double beta1 = 0.0;
    double beta2 = 0.9;
    double eps = 1e-8;
};

class Adam {
  public:
    explicit Adam(AdamConfig cfg = {}) : cfg_(cfg) {}
    void step(ParamStore& params) {
        ++t_;
        adam_step(params, state_, cfg_.lr, cfg_.beta1, cfg_.beta2, cfg_.eps, t_);
    }
    int steps_taken() const { return t_; }
    ParamStore& state() { return state_; }
    AdamConfig& config() { return cfg_; }

  private:
    AdamConfig cfg_;
    ParamStore state_;
    int t_ = 0;
};

}  // namespace ftdr
