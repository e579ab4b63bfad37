#include "diffmts/run_config.hpp"

#include <fstream>
#include <set>

#include "json_config.hpp"

namespace diffmts {

namespace {

using nlohmann::json;

void reject_unknown(const json& j, const std::set<std::string>& known, const char* section) {
    for (const auto& [key, value] : j.items()) {
        (void)value;
        if (!known.count(key)) {
            throw ValidationError(std::string("config: unknown key '") + key + "' in " + section);
        }
    }
}

template <typename T>
void maybe(const json& j, const char* key, T& out) {
    if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

std::vector<std::uint64_t> RunConfig::effective_seeds() const {
    if (!seeds.empty()) return seeds;
    std::vector<std::uint64_t> out;
    for (std::uint64_t i = 0; i < 5; ++i) out.push_back(seed + i);
    return out;
}

RunConfig parse_run_config(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ValidationError("config: top level must be an object");

    RunConfig c;
    reject_unknown(j, {"seed", "seeds", "data", "model", "schedule", "train", "eval"}, "root");
    maybe(j, "seed", c.seed);
    maybe(j, "seeds", c.seeds);

    try {
        if (j.contains("data")) {
            const json& d = j.at("data");
            reject_unknown(d, {"path", "length", "stride", "rul_cap"}, "data");
            maybe(d, "path", c.data.path);
            maybe(d, "length", c.data.length);
            maybe(d, "stride", c.data.stride);
            maybe(d, "rul_cap", c.data.rul_cap);
        }
        if (j.contains("model")) {
            const json& m = j.at("model");
            reject_unknown(m,
                           {"in_channels", "length", "base_filters", "channel_multipliers",
                            "time_embed_dim", "cond_embed_dim", "mask_alpha", "groups",
                            "attention_dim", "use_decomposition", "use_attention",
                            "post_decoder_tdr", "zero_init_head"},
                           "model");
            maybe(m, "in_channels", c.model.in_channels);
            maybe(m, "length", c.model.length);
            maybe(m, "base_filters", c.model.base_filters);
            maybe(m, "channel_multipliers", c.model.channel_multipliers);
            maybe(m, "time_embed_dim", c.model.time_embed_dim);
            maybe(m, "cond_embed_dim", c.model.cond_embed_dim);
            maybe(m, "mask_alpha", c.model.mask_alpha);
            maybe(m, "groups", c.model.groups);
            maybe(m, "attention_dim", c.model.attention_dim);
            maybe(m, "use_decomposition", c.model.use_decomposition);
            maybe(m, "use_attention", c.model.use_attention);
            maybe(m, "post_decoder_tdr", c.model.post_decoder_tdr);
            maybe(m, "zero_init_head", c.model.zero_init_head);
        }
        if (j.contains("schedule")) {
            const json& s = j.at("schedule");
            reject_unknown(s, {"kind", "steps", "offset"}, "schedule");
            if (s.contains("kind")) c.schedule.kind = schedule_kind_from_string(s.at("kind"));
            maybe(s, "steps", c.schedule.steps);
            maybe(s, "offset", c.schedule.offset);
        }
        if (j.contains("train")) {
            const json& t = j.at("train");
            reject_unknown(t,
                           {"epochs", "batch_size", "lr", "beta1", "beta2", "eps", "grad_clip",
                            "log_every", "precision", "mmd_enabled", "omega_mode", "omega_value",
                            "kernel_scales", "kernel_bandwidth", "checkpoint"},
                           "train");
            maybe(t, "epochs", c.train.epochs);
            maybe(t, "batch_size", c.train.batch_size);
            maybe(t, "lr", c.train.adam.lr);
            maybe(t, "beta1", c.train.adam.beta1);
            maybe(t, "beta2", c.train.adam.beta2);
            maybe(t, "eps", c.train.adam.eps);
            maybe(t, "grad_clip", c.train.grad_clip);
            maybe(t, "log_every", c.train.log_every);
            if (t.contains("precision")) {
                c.train.precision = precision_from_string(t.at("precision"));
            }
            maybe(t, "mmd_enabled", c.train.mmd_enabled);
            if (t.contains("omega_mode")) {
                const std::string mode = t.at("omega_mode").get<std::string>();
                if (mode == "learnable") {
                    c.train.omega_learnable = true;
                } else if (mode == "fixed") {
                    c.train.omega_learnable = false;
                } else {
                    throw ValidationError("config: omega_mode must be learnable or fixed");
                }
            }
            maybe(t, "omega_value", c.train.omega_fixed_value);
            maybe(t, "kernel_scales", c.train.kernel.bandwidth_scales);
            if (t.contains("kernel_bandwidth") && !t.at("kernel_bandwidth").is_null()) {
                c.train.kernel.fixed_bandwidth = t.at("kernel_bandwidth").get<double>();
            }
            maybe(t, "checkpoint", c.checkpoint_path);
        }
        if (j.contains("eval")) {
            const json& e = j.at("eval");
            reject_unknown(e, {"epochs", "hidden", "layers", "batch_size", "lr", "jobs"}, "eval");
            maybe(e, "epochs", c.eval.net.epochs);
            maybe(e, "hidden", c.eval.net.hidden);
            maybe(e, "layers", c.eval.net.layers);
            maybe(e, "batch_size", c.eval.net.batch_size);
            maybe(e, "lr", c.eval.net.lr);
            maybe(e, "jobs", c.eval.jobs);
        }
    } catch (const json::exception& e) {
        throw ValidationError(std::string("config: ") + e.what());
    }

    c.train.seed = c.seed;
    return c;
}

RunConfig load_run_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file: " + path);
    std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_run_config(text);
}

std::string run_config_to_json(const RunConfig& c) {
    json j;
    j["seed"] = c.seed;
    j["seeds"] = c.seeds;
    j["data"] = {{"path", c.data.path},
                 {"length", c.data.length},
                 {"stride", c.data.stride},
                 {"rul_cap", c.data.rul_cap}};
    j["model"] = model_config_to_json(c.model);
    j["schedule"] = {{"kind", to_string(c.schedule.kind)},
                     {"steps", c.schedule.steps},
                     {"offset", c.schedule.offset}};
    j["train"] = {{"epochs", c.train.epochs},
                  {"batch_size", c.train.batch_size},
                  {"lr", c.train.adam.lr},
                  {"beta1", c.train.adam.beta1},
                  {"beta2", c.train.adam.beta2},
                  {"eps", c.train.adam.eps},
                  {"grad_clip", c.train.grad_clip},
                  {"log_every", c.train.log_every},
                  {"precision", to_string(c.train.precision)},
                  {"mmd_enabled", c.train.mmd_enabled},
                  {"omega_mode", c.train.omega_learnable ? "learnable" : "fixed"},
                  {"omega_value", c.train.omega_fixed_value},
                  {"kernel_scales", c.train.kernel.bandwidth_scales},
                  {"kernel_bandwidth", c.train.kernel.fixed_bandwidth
                                           ? nlohmann::json(*c.train.kernel.fixed_bandwidth)
                                           : nlohmann::json(nullptr)},
                  {"checkpoint", c.checkpoint_path}};
    j["eval"] = {{"epochs", c.eval.net.epochs},   {"hidden", c.eval.net.hidden},
                 {"layers", c.eval.net.layers},   {"batch_size", c.eval.net.batch_size},
                 {"lr", c.eval.net.lr},           {"jobs", c.eval.jobs}};
    return j.dump(2);
}

std::uint64_t config_hash(const RunConfig& config) {
    const std::string text = run_config_to_json(config);
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

}  // namespace diffmts
