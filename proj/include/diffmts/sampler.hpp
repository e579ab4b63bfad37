#pragma once

#include <cstdint>
#include <vector>

#include "diffmts/checkpoint.hpp"

namespace diffmts {

struct SampleRequest {
    std::size_t count = 1;
    std::vector<double> conditions;  // one per sample, each in [0, 1]
    std::uint64_t seed = 0;
    bool denormalize = true;  // apply the checkpoint's inverse min-max transform

    void validate() const;
};

struct SampleSet {
    std::vector<Array> windows;  // (C, L) each
    std::vector<double> conditions;
};

// One ancestral step:
//   x_{t-1} = (x_t - (beta_t / sqrt(1 - abar_t)) * eps_hat) / sqrt(alpha_t)
//             + sqrt(posterior_var_t) * noise.
// posterior_var_1 = 0, so the terminal step is deterministic.
Array reverse_step(const Array& x_t, std::size_t t, const Array& eps_hat,
                   const ScheduleTable& table, const Array& noise);

// Draws x_T ~ N(0, I) per sample and runs the reverse chain t = T..1 with the
// checkpoint's denoiser in eval mode. Each trajectory's rng stream derives
// from (seed, sample index), so results do not depend on evaluation order.
SampleSet sample(const Checkpoint& ckpt, const SampleRequest& request);

// CSV with header sample_id,channel,t_index,value,condition.
void save_samples_csv(const SampleSet& samples, const std::string& path);
SampleSet load_samples_csv(const std::string& path);

WindowSet to_window_set(const SampleSet& samples);

}  // namespace diffmts
