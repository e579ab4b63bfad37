#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "diffmts/adam.hpp"
#include "diffmts/dataset.hpp"
#include "diffmts/schedule.hpp"
#include "diffmts/unet.hpp"

namespace diffmts {

enum class Precision { F32, F64 };

Precision precision_from_string(const std::string& s);
std::string to_string(Precision p);

// Round every value to the nearest float; keeps f32-precision state exactly
// representable so checkpoints round-trip bit-exactly.
void round_to_f32(ParamMap& params);

// Complete training state. File layout: magic "DMTS", u16 version, u32 length
// + UTF-8 JSON metadata (config, schedule, epoch, rng, array count), then one
// record per array: u32 name length + name, u8 dtype (0=f32, 1=f64), u8 ndim,
// u32 dims, little-endian raw values.
struct Checkpoint {
    ModelConfig model;
    ScheduleKind schedule_kind = ScheduleKind::Cosine;
    std::size_t schedule_steps = 1000;
    double schedule_offset = 0.008;
    Precision precision = Precision::F32;
    ParamMap params;
    AdamState adam;
    std::int64_t epoch = 0;
    std::map<std::string, std::uint64_t> rng_state;
    NormStats norm;
};

constexpr std::uint16_t kCheckpointVersion = 1;

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

// FNV-1a over the file bytes; used by manifests to identify checkpoints.
std::uint64_t file_hash(const std::string& path);

}  // namespace diffmts
