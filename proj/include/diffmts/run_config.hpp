#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "diffmts/evaluators.hpp"
#include "diffmts/schedule.hpp"
#include "diffmts/train.hpp"
#include "diffmts/unet.hpp"

namespace diffmts {

struct DataConfig {
    std::string path;
    std::size_t length = 24;
    std::size_t stride = 1;
    double rul_cap = 125.0;
};

struct ScheduleConfig {
    ScheduleKind kind = ScheduleKind::Cosine;
    std::size_t steps = 1000;
    double offset = 0.008;
};

struct EvalSettings {
    EvalNetConfig net;
    std::size_t jobs = 1;
};

// One document combining everything a run needs. Unknown keys are rejected;
// a parsed config serializes back to the identical effective document.
struct RunConfig {
    std::uint64_t seed = 0;
    std::vector<std::uint64_t> seeds;  // eval repeats; defaults to seed..seed+4
    DataConfig data;
    ModelConfig model;
    ScheduleConfig schedule;
    TrainConfig train;
    std::string checkpoint_path = "model.dmts";
    EvalSettings eval;

    std::vector<std::uint64_t> effective_seeds() const;
};

RunConfig parse_run_config(const std::string& json_text);
RunConfig load_run_config(const std::string& path);
std::string run_config_to_json(const RunConfig& config);  // pretty-printed
std::uint64_t config_hash(const RunConfig& config);

}  // namespace diffmts
