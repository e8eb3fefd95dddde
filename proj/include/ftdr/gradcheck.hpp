#pragma once

#include <string>
#include <vector>

#include "ftdr/tensor.hpp"

namespace ftdr::gradcheck {

struct BlockResult {
    std::string name;
    double max_rel_err;
};

struct Report {
    std::vector<BlockResult> blocks;
    double threshold = 1e-4;

    double worst() const {
        double w = 0.0;
        for (const auto& b : blocks) w = std::max(w, b.max_rel_err);
        return w;
    }
    bool pass() const { return worst() < threshold; }
};

// Central finite differences (h = 1e-5) against recorded backward gradients
// for every differentiable block, at toy shapes. Deterministic given seed.
Report run(uint64_t seed);

std::string format(const Report& report);

}  // namespace ftdr::gradcheck
