#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "diffmts/array.hpp"

namespace diffmts {

// One unit's full degradation history: readings (channels, cycles) with
// cycles implicitly 1..n.
struct Trajectory {
    int unit_id = 0;
    Array readings;
    std::size_t cycles() const { return readings.rank() == 2 ? readings.dim(1) : 0; }
};

struct TrajectorySet {
    std::vector<std::string> channel_names;
    std::vector<Trajectory> units;
};

struct Provenance {
    int unit_id = 0;
    std::size_t end_cycle = 0;
};

// Per-channel min/max statistics of a window set; fitted once on training
// data and reused for the inverse transform.
struct NormStats {
    bool fitted = false;
    std::vector<double> min;
    std::vector<double> max;
};

struct WindowSet {
    std::vector<std::string> channel_names;
    std::vector<Array> windows;  // each (C, L)
    std::vector<double> conditions;
    std::vector<Provenance> provenance;
    NormStats stats;

    std::size_t count() const { return windows.size(); }
    std::size_t channels() const { return windows.empty() ? 0 : windows.front().dim(0); }
    std::size_t length() const { return windows.empty() ? 0 : windows.front().dim(1); }
};

// C-MAPSS text contract: unit cycle set1 set2 set3 s1..s21, whitespace- or
// comma-delimited. Sensors 1,5,6,10,16,18,19 hold constant values and are
// dropped, leaving 14 channels.
TrajectorySet load_cmapss(const std::string& path);
void save_cmapss(const TrajectorySet& set, const std::string& path);

// Indices (1-based among s1..s21) of the sensors kept by load_cmapss.
const std::vector<int>& cmapss_kept_sensors();

// Capped remaining life per cycle: min(end - cycle, cap) / cap in [0, 1].
std::vector<double> compute_condition(const Trajectory& trajectory, double cap);

// Sliding windows ending at each eligible cycle; the window condition is the
// condition at its final cycle. Units shorter than `length` contribute nothing.
WindowSet window(const TrajectorySet& trajectories, std::size_t length, std::size_t stride,
                 double rul_cap);

// Per-channel min-max to [-1, 1] in place; constant channels map to 0.
NormStats normalize(WindowSet& windows);
// Apply existing statistics (held-out data; values may leave [-1, 1]).
void apply_normalize(WindowSet& windows, const NormStats& stats);
Array denormalize(const Array& window, const NormStats& stats);

struct SynthConfig {
    std::size_t units = 20;
    std::size_t channels = 14;
    std::size_t max_cycles = 180;
    double noise_std = 0.02;
    double seasonal_amp = 0.1;
    std::uint64_t seed = 0;
};

// Seeded stand-in for the turbofan corpus: per unit a random lifetime, per
// channel a smooth monotone degradation curve (random exponent/scale/sign)
// plus a unit-specific sinusoid plus Gaussian noise.
TrajectorySet synth_degradation(const SynthConfig& config);

// Corpus where every window's channel mean equals its condition exactly;
// used by the condition-consistency and train-on-synthetic checks.
WindowSet make_mean_coded_windows(std::size_t count, std::size_t channels, std::size_t length,
                                  double noise_std, std::uint64_t seed);

}  // namespace diffmts
