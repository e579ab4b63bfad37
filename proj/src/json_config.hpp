#pragma once

// JSON conversions shared by checkpoint metadata and the run config.

#include <json.hpp>

#include "diffmts/unet.hpp"

namespace diffmts {

inline nlohmann::json model_config_to_json(const ModelConfig& c) {
    return nlohmann::json{{"in_channels", c.in_channels},
                          {"length", c.length},
                          {"base_filters", c.base_filters},
                          {"channel_multipliers", c.channel_multipliers},
                          {"time_embed_dim", c.time_embed_dim},
                          {"cond_embed_dim", c.cond_embed_dim},
                          {"mask_alpha", c.mask_alpha},
                          {"groups", c.groups},
                          {"attention_dim", c.attention_dim},
                          {"use_decomposition", c.use_decomposition},
                          {"use_attention", c.use_attention},
                          {"post_decoder_tdr", c.post_decoder_tdr},
                          {"zero_init_head", c.zero_init_head}};
}

inline ModelConfig model_config_from_json(const nlohmann::json& j) {
    ModelConfig c;
    c.in_channels = j.at("in_channels").get<std::size_t>();
    c.length = j.at("length").get<std::size_t>();
    c.base_filters = j.at("base_filters").get<std::size_t>();
    c.channel_multipliers = j.at("channel_multipliers").get<std::vector<std::size_t>>();
    c.time_embed_dim = j.at("time_embed_dim").get<std::size_t>();
    c.cond_embed_dim = j.at("cond_embed_dim").get<std::size_t>();
    c.mask_alpha = j.at("mask_alpha").get<double>();
    c.groups = j.at("groups").get<std::size_t>();
    c.attention_dim = j.at("attention_dim").get<std::size_t>();
    c.use_decomposition = j.at("use_decomposition").get<bool>();
    c.use_attention = j.at("use_attention").get<bool>();
    c.post_decoder_tdr = j.at("post_decoder_tdr").get<bool>();
    c.zero_init_head = j.at("zero_init_head").get<bool>();
    return c;
}

}  // namespace diffmts
