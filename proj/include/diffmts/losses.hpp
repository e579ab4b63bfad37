#pragma once

#include <optional>
#include <vector>

#include "diffmts/tape.hpp"

namespace diffmts {

// Mixture of RBF kernels exp(-d^2 / (2 (scale * h)^2)) averaged over the
// scales; h is the median pairwise distance of the joint sample, recomputed
// per call and treated as a constant w.r.t. gradients. Setting
// fixed_bandwidth pins h instead (the single fixed-bandwidth ablation).
struct KernelSpec {
    std::vector<double> bandwidth_scales = {0.5, 1.0, 2.0};
    std::optional<double> fixed_bandwidth;

    void validate() const {
        if (bandwidth_scales.empty()) throw ConfigError("kernel: no bandwidth scales");
        for (double s : bandwidth_scales) {
            if (s <= 0.0) throw ConfigError("kernel: bandwidth scales must be positive");
        }
        if (fixed_bandwidth && *fixed_bandwidth <= 0.0) {
            throw ConfigError("kernel: fixed bandwidth must be positive");
        }
    }
};

struct LossBreakdown {
    double l_noise = 0.0;
    double l_mmd = 0.0;
    double l_total = 0.0;
    double omega = 0.0;
};

// Mean over all elements of the squared difference.
double noise_mse(const Array& eps, const Array& eps_hat);

// Median pairwise Euclidean distance over the flattened joint sample;
// falls back to 1 when all samples coincide.
double median_pairwise_distance(const std::vector<const Array*>& joint);

// Biased V-statistic MMD^2 estimate:
//   mean k(n_i, n_j) - 2 mean k(m_i, n_j) + mean k(m_i, m_j).
// All three terms run the same full double loop, so identical sample sets
// cancel to exactly zero.
double mmd(const std::vector<Array>& n, const std::vector<Array>& m, const KernelSpec& kernel);

// Tape forms used by training; `n` (the true noises) is treated as constant.
Value noise_mse_on_tape(Tape& tape, const std::vector<Value>& eps,
                        const std::vector<Value>& eps_hat);
Value mmd_on_tape(Tape& tape, const std::vector<Value>& n, const std::vector<Value>& m,
                  const KernelSpec& kernel);

struct AdaMmdOptions {
    bool mmd_enabled = true;
    // When set, omega is pinned to this value and omega_logit gets no
    // gradient (the "fixed omega" ablation).
    std::optional<double> fixed_omega;
    KernelSpec kernel;
};

struct AdaMmdResult {
    Value total;  // scalar on the tape; gradients flow to eps_hat and omega_logit
    LossBreakdown breakdown;
};

// L = (1 - omega) * L_noise + omega * L_mmd with omega = sigmoid(omega_logit).
AdaMmdResult ada_mmd_loss(Tape& tape, const std::vector<Value>& eps,
                          const std::vector<Value>& eps_hat, Value omega_logit,
                          const AdaMmdOptions& options);

}  // namespace diffmts
