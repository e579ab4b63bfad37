#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "diffmts/array.hpp"

namespace diffmts {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Per-parameter first/second moments plus the shared step counter.
struct AdamState {
    ParamMap m;
    ParamMap v;
    std::int64_t step = 0;

    static AdamState init(const ParamMap& params);
};

// One bias-corrected Adam update over every (param, grad) pair. Gradients
// missing from `grads` are treated as zero. Throws TrainingError naming the
// parameter if its gradient is non-finite.
void adam_step(ParamMap& params, const ParamMap& grads, AdamState& state, const AdamConfig& cfg);

// Scales all gradients by min(1, max_norm / global_l2_norm). Returns the norm.
double clip_grad_norm(ParamMap& grads, double max_norm);

}  // namespace diffmts
