#pragma once

#include <cstdint>
#include <vector>

#include "diffmts/dataset.hpp"
#include "diffmts/tape.hpp"
#include "diffmts/adam.hpp"
#include "diffmts/rng.hpp"

namespace diffmts {

struct EvalNetConfig {
    std::size_t hidden = 32;
    std::size_t layers = 2;
    std::size_t epochs = 40;
    std::size_t batch_size = 32;
    double lr = 1e-3;
};

// Gated recurrent network (standard LSTM cells) with a scalar head; the
// evaluator behind both scores.
class LstmNet {
public:
    LstmNet(std::size_t input_dim, const EvalNetConfig& config);

    ParamMap init_params(Rng& rng) const;
    // window (C, L) consumed column by column; returns the scalar head output
    Value forward(Tape& tape, const TapeParams& p, const Array& window) const;

    std::size_t input_dim() const { return input_dim_; }

private:
    std::size_t input_dim_;
    EvalNetConfig config_;
};

// Real-vs-synthetic test accuracy of a freshly trained classifier on the
// pooled, shuffled 70/10/20 split. 0.5 means indistinguishable.
double discriminative_score(const WindowSet& real, const WindowSet& synth,
                            const EvalNetConfig& config, std::uint64_t seed);

// Train-on-synthetic-test-on-real: RMSE, in condition units, of a regressor
// trained on the synthetic windows and evaluated on the real ones.
double predictive_score(const WindowSet& synth_train, const WindowSet& real_test,
                        const EvalNetConfig& config, std::uint64_t seed);

}  // namespace diffmts
