#include "diffmts/unet.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace diffmts {

namespace {
constexpr double kGroupNormEps = 1e-5;
constexpr double kOmegaLogitInit = -2.2;
}  // namespace

void ModelConfig::validate() const {
    if (in_channels == 0 || length == 0 || base_filters == 0) {
        throw ConfigError("model: channels, length and base_filters must be positive");
    }
    if (channel_multipliers.empty()) throw ConfigError("model: channel_multipliers empty");
    for (std::size_t m : channel_multipliers) {
        if (m == 0) throw ConfigError("model: channel multiplier must be positive");
    }
    const std::size_t down = levels() - 1;
    if (length % (std::size_t{1} << down) != 0) {
        throw ConfigError("model: length " + std::to_string(length) + " not divisible by 2^" +
                          std::to_string(down));
    }
    if (time_embed_dim < 2 || time_embed_dim % 2 != 0) {
        throw ConfigError("model: time_embed_dim must be even and >= 2");
    }
    if (cond_embed_dim == 0 || attention_dim == 0) {
        throw ConfigError("model: embedding dims must be positive");
    }
    if (mask_alpha < 0.0 || mask_alpha > 1.0) {
        throw ConfigError("model: mask_alpha must lie in [0, 1]");
    }
    if (groups == 0) throw ConfigError("model: groups must be positive");
}

std::size_t ModelConfig::decoder_width(std::size_t level) const {
    // Mirror of the encoder plan: the stage feeding resolution r gets the
    // encoder width one level shallower (64/32/32 for the default 32/64/64).
    const std::size_t n = levels();
    const std::size_t src = level + 2 <= n ? n - 2 - level : 0;
    return width(src);
}

Array sinusoidal_embedding(std::size_t t, std::size_t dim) {
    const std::size_t half = dim / 2;
    Array out({dim});
    const double tv = static_cast<double>(t);
    for (std::size_t i = 0; i < half; ++i) {
        const double exponent =
            half > 1 ? static_cast<double>(i) / static_cast<double>(half - 1) : 0.0;
        const double freq = std::exp(-std::log(10000.0) * exponent);
        out[i] = std::sin(tv * freq);
        out[half + i] = std::cos(tv * freq);
    }
    return out;
}

TdrUnet::TdrUnet(ModelConfig config) : config_(std::move(config)) { config_.validate(); }

std::size_t TdrUnet::norm_groups(std::size_t channels) const {
    if (channels >= config_.groups && channels % config_.groups == 0) return config_.groups;
    return 1;
}

namespace {

// Parameter construction mirrors the forward pass; draws happen in this fixed
// order so init is reproducible from the seed alone.
struct ParamBuilder {
    ParamMap params;
    Rng& rng;

    void conv(const std::string& name, std::size_t c_out, std::size_t c_in, std::size_t k,
              bool zero = false) {
        Array w({c_out, c_in, k});
        if (!zero) {
            const double bound = 1.0 / std::sqrt(static_cast<double>(c_in * k));
            for (std::size_t i = 0; i < w.size(); ++i) w[i] = rng.uniform(-bound, bound);
        }
        params.emplace(name + ".w", std::move(w));
        params.emplace(name + ".b", Array({c_out}));
    }

    void fc(const std::string& name, std::size_t out_n, std::size_t in_n) {
        Array w({out_n, in_n});
        const double bound = 1.0 / std::sqrt(static_cast<double>(in_n));
        for (std::size_t i = 0; i < w.size(); ++i) w[i] = rng.uniform(-bound, bound);
        params.emplace(name + ".w", std::move(w));
        params.emplace(name + ".b", Array({out_n}));
    }

    void group_norm(const std::string& name, std::size_t channels) {
        params.emplace(name + ".gamma", Array::full({channels}, 1.0));
        params.emplace(name + ".beta", Array({channels}));
    }
};

}  // namespace

ParamMap TdrUnet::init_params(Rng& rng) const {
    const ModelConfig& c = config_;
    ParamBuilder b{ParamMap{}, rng};

    b.conv("embed.noisy", c.width(0), c.in_channels, 7);
    b.fc("embed.time.fc1", c.time_embed_dim, c.time_embed_dim);
    b.fc("embed.time.fc2", c.time_embed_dim, c.time_embed_dim);
    b.fc("embed.cond.fc1", c.cond_embed_dim, 1);
    b.fc("embed.cond.fc2", c.cond_embed_dim, c.cond_embed_dim);

    const std::size_t n = c.levels();
    for (std::size_t i = 0; i < n; ++i) {
        const std::string prefix = "enc" + std::to_string(i) + ".";
        const std::size_t in_w = i == 0 ? c.width(0) : c.width(i - 1);
        const std::size_t w = c.width(i);
        b.conv(prefix + "block1.conv", w, in_w, 3);
        b.group_norm(prefix + "block1.gn", w);
        b.fc(prefix + "block1.temb", w, c.time_embed_dim);
        b.fc(prefix + "block1.cemb", w, c.cond_embed_dim);
        b.conv(prefix + "block2.conv", w, w, 3);
        b.group_norm(prefix + "block2.gn", w);
        if (in_w != w) b.conv(prefix + "res", w, in_w, 1);
        if (i + 1 < n) b.conv(prefix + "down", w, w, 4);
    }

    auto tdr_params = [&](const std::string& prefix, std::size_t w) {
        if (c.use_decomposition) b.conv(prefix + ".fuse", w, 2 * w, 1);
        if (c.use_attention) {
            b.conv(prefix + ".qkv", 3 * c.attention_dim, w, 1);
            b.conv(prefix + ".proj", w, c.attention_dim, 1);
        }
    };
    tdr_params("tdr", c.width(n - 1));

    for (std::size_t i = 0; i < n; ++i) {
        const std::string prefix = "dec" + std::to_string(i) + ".";
        const std::size_t w = c.decoder_width(i);
        const std::size_t skip_w = c.width(n - 1 - i);
        const std::size_t in_w = (i == 0 ? c.width(n - 1) : c.decoder_width(i - 1)) + skip_w;
        b.conv(prefix + "block1.conv", w, in_w, 3);
        b.group_norm(prefix + "block1.gn", w);
        b.fc(prefix + "block1.temb", w, c.time_embed_dim);
        b.fc(prefix + "block1.cemb", w, c.cond_embed_dim);
        b.conv(prefix + "block2.conv", w, w, 3);
        b.group_norm(prefix + "block2.gn", w);
        b.conv(prefix + "res", w, in_w, 1);
    }

    if (c.post_decoder_tdr) tdr_params("tdr_post", c.decoder_width(n - 1));

    b.conv("head", c.in_channels, c.decoder_width(n - 1), 1, c.zero_init_head);
    b.params.emplace("omega_logit", Array::scalar(kOmegaLogitInit));
    return std::move(b.params);
}

namespace {
Value pget(const TapeParams& p, const std::string& name) {
    auto it = p.find(name);
    if (it == p.end()) throw ConfigError("model: missing parameter '" + name + "'");
    return it->second;
}
}  // namespace

Value TdrUnet::embed_noisy(Tape& tape, const TapeParams& p, Value x_t) const {
    if (x_t.shape()[0] != config_.in_channels) {
        throw ShapeError("embed_noisy: expected " + std::to_string(config_.in_channels) +
                         " channels, got " + shape_str(x_t.shape()));
    }
    return tape.conv1d(x_t, pget(p, "embed.noisy.w"), pget(p, "embed.noisy.b"), 1,
                       ops::Pad::same());
}

Value TdrUnet::embed_timestep(Tape& tape, const TapeParams& p, std::size_t t) const {
    Value pos = tape.constant(sinusoidal_embedding(t, config_.time_embed_dim));
    Value h = tape.linear(pget(p, "embed.time.fc1.w"), pos, pget(p, "embed.time.fc1.b"));
    h = tape.activation(h, ops::Act::GeLU);
    return tape.linear(pget(p, "embed.time.fc2.w"), h, pget(p, "embed.time.fc2.b"));
}

Value TdrUnet::embed_condition(Tape& tape, const TapeParams& p, double x_c, RunMode mode,
                               Rng* mask_rng) const {
    if (x_c < 0.0 || x_c > 1.0) {
        throw ValidationError("condition " + std::to_string(x_c) + " outside [0, 1]");
    }
    Value in = tape.constant(Array({1}, {x_c}));
    Value h = tape.linear(pget(p, "embed.cond.fc1.w"), in, pget(p, "embed.cond.fc1.b"));
    h = tape.activation(h, ops::Act::GeLU);
    h = tape.linear(pget(p, "embed.cond.fc2.w"), h, pget(p, "embed.cond.fc2.b"));

    if (mode == RunMode::Train && config_.mask_alpha > 0.0) {
        if (!mask_rng) throw ConfigError("embed_condition: train mode requires an rng");
        const std::size_t dim = config_.cond_embed_dim;
        const std::size_t masked =
            static_cast<std::size_t>(std::llround(config_.mask_alpha * static_cast<double>(dim)));
        // choose `masked` distinct entries, then overwrite them with N(0,1)
        std::vector<std::size_t> idx(dim);
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        for (std::size_t i = 0; i < masked; ++i) {
            const std::size_t j = i + mask_rng->index(dim - i);
            std::swap(idx[i], idx[j]);
        }
        std::sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(masked));
        Array keep = Array::full({dim}, 1.0);
        Array noise({dim});
        for (std::size_t i = 0; i < masked; ++i) {
            keep[idx[i]] = 0.0;
            noise[idx[i]] = mask_rng->normal();
        }
        h = tape.add(tape.mul(h, tape.constant(keep)), tape.constant(noise));
    }
    return h;
}

Value TdrUnet::conv_block(Tape& tape, const TapeParams& p, const std::string& prefix, Value x,
                          std::optional<Value> channel_bias) const {
    Value h = tape.conv1d(x, pget(p, prefix + ".conv.w"), pget(p, prefix + ".conv.b"), 1,
                          ops::Pad::same());
    if (channel_bias) h = tape.add_channel_bias(h, *channel_bias);
    const std::size_t channels = h.shape()[0];
    h = tape.group_norm(h, norm_groups(channels), pget(p, prefix + ".gn.gamma"),
                        pget(p, prefix + ".gn.beta"), kGroupNormEps);
    return tape.activation(h, ops::Act::SiLU);
}

Value TdrUnet::level_blocks(Tape& tape, const TapeParams& p, const std::string& prefix, Value x,
                            Value t_emb, Value c_emb) const {
    Value bias_t = tape.linear(pget(p, prefix + "block1.temb.w"), t_emb,
                               pget(p, prefix + "block1.temb.b"));
    Value bias_c = tape.linear(pget(p, prefix + "block1.cemb.w"), c_emb,
                               pget(p, prefix + "block1.cemb.b"));
    Value bias = tape.add(bias_t, bias_c);
    Value h = conv_block(tape, p, prefix + "block1", x, bias);
    h = conv_block(tape, p, prefix + "block2", h, std::nullopt);
    Value res = x;
    if (p.count(prefix + "res.w")) {
        res = tape.conv1d(x, pget(p, prefix + "res.w"), pget(p, prefix + "res.b"), 1,
                          ops::Pad::same());
    }
    return tape.add(h, res);
}

TdrUnet::EncoderOut TdrUnet::encoder_forward(Tape& tape, const TapeParams& p, Value h,
                                             Value t_emb, Value c_emb, std::size_t level) const {
    if (level >= config_.levels()) throw ConfigError("encoder: level out of range");
    const std::string prefix = "enc" + std::to_string(level) + ".";
    Value skip = level_blocks(tape, p, prefix, h, t_emb, c_emb);
    Value down = skip;
    if (level + 1 < config_.levels()) {
        if (skip.shape()[1] % 2 != 0) {
            throw ShapeError("encoder: length " + std::to_string(skip.shape()[1]) +
                             " not divisible by 2 at downsample");
        }
        down = tape.conv1d(skip, pget(p, prefix + "down.w"), pget(p, prefix + "down.b"), 2,
                           ops::Pad::same());
    }
    return {skip, down};
}

TapeDecomposition TdrUnet::decompose(Tape& tape, const TapeParams& p, Value x,
                                     const std::string& prefix) const {
    Value trend = tape.pool1d(x, ops::PoolKind::Avg, 3, 1);
    Value peak = tape.pool1d(x, ops::PoolKind::Max, 3, 1);
    Value fused = tape.conv1d(tape.concat_axis0(trend, peak), pget(p, prefix + ".fuse.w"),
                              pget(p, prefix + ".fuse.b"), 1, ops::Pad::same());
    return {trend, peak, fused};
}

Value TdrUnet::reconstruct_attention(Tape& tape, const TapeParams& p, Value fused,
                                     const std::string& prefix, Array* attn_out) const {
    const std::size_t a = config_.attention_dim;
    Value qkv = tape.conv1d(fused, pget(p, prefix + ".qkv.w"), pget(p, prefix + ".qkv.b"), 1,
                            ops::Pad::same());
    Value q = tape.slice_axis0(qkv, 0, a);
    Value k = tape.slice_axis0(qkv, a, 2 * a);
    Value v = tape.slice_axis0(qkv, 2 * a, 3 * a);
    Value scores = tape.scale(tape.matmul(tape.transpose(q), k),
                              1.0 / std::sqrt(static_cast<double>(a)));
    Value attn = tape.softmax(scores, 1);
    if (attn_out) *attn_out = attn.array();
    Value context = tape.transpose(tape.matmul(attn, tape.transpose(v)));  // (A, L)
    Value out = tape.conv1d(context, pget(p, prefix + ".proj.w"), pget(p, prefix + ".proj.b"), 1,
                            ops::Pad::same());
    return tape.add(out, fused);
}

Value TdrUnet::tdr_stage(Tape& tape, const TapeParams& p, Value x,
                         const std::string& prefix) const {
    Value f = x;
    if (config_.use_decomposition) f = decompose(tape, p, x, prefix).fused;
    if (config_.use_attention) f = reconstruct_attention(tape, p, f, prefix);
    return f;
}

Value TdrUnet::decoder_forward(Tape& tape, const TapeParams& p, Value h, Value skip, Value t_emb,
                               Value c_emb, std::size_t level) const {
    if (level >= config_.levels()) throw ConfigError("decoder: level out of range");
    if (level > 0) h = tape.upsample_nearest(h, 2);
    if (h.shape()[1] != skip.shape()[1]) {
        throw ShapeError("decoder: skip length " + std::to_string(skip.shape()[1]) +
                         " does not match features " + std::to_string(h.shape()[1]));
    }
    Value x = tape.concat_axis0(h, skip);
    return level_blocks(tape, p, "dec" + std::to_string(level) + ".", x, t_emb, c_emb);
}

Value TdrUnet::forward(Tape& tape, const TapeParams& p, Value x_t, std::size_t t, double x_c,
                       RunMode mode, Rng* mask_rng) const {
    const Shape& in_shape = x_t.shape();
    if (in_shape.size() != 2 || in_shape[0] != config_.in_channels ||
        in_shape[1] != config_.length) {
        throw ShapeError("denoise: expected input (" + std::to_string(config_.in_channels) +
                         ", " + std::to_string(config_.length) + "), got " + shape_str(in_shape));
    }
    Value t_emb = embed_timestep(tape, p, t);
    Value c_emb = embed_condition(tape, p, x_c, mode, mask_rng);

    Value h = embed_noisy(tape, p, x_t);
    const std::size_t n = config_.levels();
    std::vector<Value> skips;
    skips.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        EncoderOut out = encoder_forward(tape, p, h, t_emb, c_emb, i);
        skips.push_back(out.skip);
        h = out.down;
    }

    h = tdr_stage(tape, p, h, "tdr");

    for (std::size_t i = 0; i < n; ++i) {
        h = decoder_forward(tape, p, h, skips[n - 1 - i], t_emb, c_emb, i);
    }

    if (config_.post_decoder_tdr) h = tdr_stage(tape, p, h, "tdr_post");

    return tape.conv1d(h, pget(p, "head.w"), pget(p, "head.b"), 1, ops::Pad::same());
}

Array TdrUnet::denoise(const ParamMap& params, const Array& x_t, std::size_t t,
                       double x_c) const {
    Tape tape(false);
    TapeParams p = bind_params(tape, params, false);
    Value out = forward(tape, p, tape.constant(x_t), t, x_c, RunMode::Eval, nullptr);
    return out.array();
}

}  // namespace diffmts
