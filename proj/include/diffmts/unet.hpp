#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "diffmts/adam.hpp"
#include "diffmts/rng.hpp"
#include "diffmts/tape.hpp"

namespace diffmts {

struct ModelConfig {
    std::size_t in_channels = 14;
    std::size_t length = 24;  // 24 / 48 / 96
    std::size_t base_filters = 32;
    std::vector<std::size_t> channel_multipliers = {1, 2, 2};
    std::size_t time_embed_dim = 128;
    std::size_t cond_embed_dim = 128;
    double mask_alpha = 0.1;
    std::size_t groups = 8;
    std::size_t attention_dim = 128;  // d_k; the QKV projection emits 3x this
    bool use_decomposition = true;
    bool use_attention = true;
    bool post_decoder_tdr = false;
    bool zero_init_head = true;

    void validate() const;
    std::size_t levels() const { return channel_multipliers.size(); }
    std::size_t width(std::size_t level) const {
        return base_filters * channel_multipliers[level];
    }
    // Widths along the decoder path, deepest first (e.g. 64/32/32 by default).
    std::size_t decoder_width(std::size_t level) const;
    std::size_t bottleneck_length() const { return length >> (levels() - 1); }
};

// Sinusoidal position encoding: half sine, half cosine, log-spaced
// frequencies with base 10000.
Array sinusoidal_embedding(std::size_t t, std::size_t dim);

enum class RunMode { Train, Eval };

struct TapeDecomposition {
    Value trend;
    Value peak;
    Value fused;
};

// The denoising network eps_theta(x_t, t | x_c): conv input embedding, a UNet
// whose resolution halves levels-1 times, and a decomposition-reconstruction
// stage between encoder and decoder.
class TdrUnet {
public:
    explicit TdrUnet(ModelConfig config);

    const ModelConfig& config() const { return config_; }

    // Fan-in-scaled uniform init for convs and FC layers, zero biases,
    // GroupNorm gamma=1/beta=0, zero-initialized output head (configurable),
    // omega logit at -2.2. Draw order is the fixed construction order.
    ParamMap init_params(Rng& rng) const;

    Value embed_noisy(Tape& tape, const TapeParams& p, Value x_t) const;
    Value embed_timestep(Tape& tape, const TapeParams& p, std::size_t t) const;
    // In train mode a fraction mask_alpha of the embedding entries is
    // replaced by standard-normal draws; eval mode never masks.
    Value embed_condition(Tape& tape, const TapeParams& p, double x_c, RunMode mode,
                          Rng* mask_rng) const;

    struct EncoderOut {
        Value skip;  // block output before downsampling
        Value down;  // downsampled features; equals skip at the deepest level
    };
    EncoderOut encoder_forward(Tape& tape, const TapeParams& p, Value h, Value t_emb,
                               Value c_emb, std::size_t level) const;

    TapeDecomposition decompose(Tape& tape, const TapeParams& p, Value x,
                                const std::string& prefix = "tdr") const;
    // attn_out, when given, receives the softmax weight matrix (L x L).
    Value reconstruct_attention(Tape& tape, const TapeParams& p, Value fused,
                                const std::string& prefix = "tdr",
                                Array* attn_out = nullptr) const;

    Value decoder_forward(Tape& tape, const TapeParams& p, Value h, Value skip, Value t_emb,
                          Value c_emb, std::size_t level) const;

    Value forward(Tape& tape, const TapeParams& p, Value x_t, std::size_t t, double x_c,
                  RunMode mode, Rng* mask_rng) const;

    // Pure eval-mode forward on a scratch tape.
    Array denoise(const ParamMap& params, const Array& x_t, std::size_t t, double x_c) const;

private:
    Value conv_block(Tape& tape, const TapeParams& p, const std::string& prefix, Value x,
                     std::optional<Value> channel_bias) const;
    Value level_blocks(Tape& tape, const TapeParams& p, const std::string& prefix, Value x,
                       Value t_emb, Value c_emb) const;
    Value tdr_stage(Tape& tape, const TapeParams& p, Value x, const std::string& prefix) const;
    std::size_t norm_groups(std::size_t channels) const;

    ModelConfig config_;
};

}  // namespace diffmts
