#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "diffmts/checkpoint.hpp"
#include "diffmts/losses.hpp"

namespace diffmts {

struct TrainConfig {
    std::size_t epochs = 70;
    std::size_t batch_size = 32;
    AdamConfig adam;  // lr 1e-3, betas 0.9/0.999, eps 1e-8
    std::uint64_t seed = 0;
    double grad_clip = 1.0;  // global-norm clip; <= 0 disables
    std::size_t log_every = 1;
    Precision precision = Precision::F32;
    bool mmd_enabled = true;
    bool omega_learnable = true;
    double omega_fixed_value = 0.1;
    KernelSpec kernel;

    void validate() const {
        if (epochs < 1 || batch_size < 1) {
            throw ConfigError("train: epochs and batch_size must be >= 1");
        }
        kernel.validate();
    }
};

struct TrainResult {
    Checkpoint checkpoint;
    // one mean LossBreakdown per completed epoch (includes resumed epochs)
    std::vector<LossBreakdown> history;
};

using EpochCallback = std::function<void(std::size_t epoch, const LossBreakdown&)>;

// Conditional diffusion training: per batch item draw eps ~ N(0,I) and
// t ~ Uniform(1,T), form x_t, predict the noise under the stored condition,
// optimize the combined loss with Adam. Windows are clamped to [-1, 1] at the
// diffusion input. `resume` continues a run from its stored epoch with
// restored optimizer and rng state.
TrainResult train(const WindowSet& data, const ModelConfig& model_config,
                  const ScheduleTable& schedule, const TrainConfig& config,
                  const Checkpoint* resume = nullptr, const EpochCallback& on_epoch = nullptr);

}  // namespace diffmts
