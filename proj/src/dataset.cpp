#include "diffmts/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "diffmts/rng.hpp"

namespace diffmts {

namespace {
constexpr int kCmapssSensors = 21;
constexpr int kCmapssColumns = 2 + 3 + kCmapssSensors;  // unit, cycle, settings, sensors
const std::vector<int> kDroppedSensors = {1, 5, 6, 10, 16, 18, 19};
}  // namespace

const std::vector<int>& cmapss_kept_sensors() {
    static const std::vector<int> kept = [] {
        std::vector<int> v;
        for (int s = 1; s <= kCmapssSensors; ++s) {
            if (std::find(kDroppedSensors.begin(), kDroppedSensors.end(), s) ==
                kDroppedSensors.end()) {
                v.push_back(s);
            }
        }
        return v;
    }();
    return kept;
}

TrajectorySet load_cmapss(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open dataset file: " + path);

    struct RawUnit {
        int id;
        std::vector<std::vector<double>> rows;  // kept sensors per cycle
    };
    std::vector<RawUnit> units;
    const std::vector<int>& kept = cmapss_kept_sensors();

    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        // commas count as separators; blank lines are skipped
        std::replace(line.begin(), line.end(), ',', ' ');
        std::istringstream ls(line);
        std::vector<double> cols;
        std::string tok;
        while (ls >> tok) {
            try {
                std::size_t used = 0;
                const double v = std::stod(tok, &used);
                if (used != tok.size()) throw std::invalid_argument(tok);
                cols.push_back(v);
            } catch (const std::exception&) {
                throw ParseError("line " + std::to_string(line_no) + ": non-numeric cell '" +
                                 tok + "'");
            }
        }
        if (cols.empty()) continue;
        if (cols.size() != static_cast<std::size_t>(kCmapssColumns)) {
            throw FormatError("line " + std::to_string(line_no) + ": expected " +
                                  std::to_string(kCmapssColumns) + " columns, got " +
                                  std::to_string(cols.size()),
                              line_no);
        }
        const int unit = static_cast<int>(cols[0]);
        const std::size_t cycle = static_cast<std::size_t>(cols[1]);
        auto it = std::find_if(units.begin(), units.end(),
                               [unit](const RawUnit& u) { return u.id == unit; });
        if (it == units.end()) {
            units.push_back({unit, {}});
            it = units.end() - 1;
        }
        if (cycle != it->rows.size() + 1) {
            throw FormatError("line " + std::to_string(line_no) + ": unit " +
                                  std::to_string(unit) + " cycles must be consecutive from 1",
                              line_no);
        }
        std::vector<double> sensors;
        sensors.reserve(kept.size());
        for (int s : kept) sensors.push_back(cols[static_cast<std::size_t>(4 + s)]);
        it->rows.push_back(std::move(sensors));
    }
    if (units.empty()) throw FormatError("dataset file contains no data rows: " + path, 0);

    TrajectorySet set;
    for (int s : kept) set.channel_names.push_back("s" + std::to_string(s));
    for (RawUnit& u : units) {
        const std::size_t cycles = u.rows.size();
        Array readings({kept.size(), cycles});
        for (std::size_t t = 0; t < cycles; ++t)
            for (std::size_t c = 0; c < kept.size(); ++c) readings.at(c, t) = u.rows[t][c];
        set.units.push_back({u.id, std::move(readings)});
    }
    return set;
}

void save_cmapss(const TrajectorySet& set, const std::string& path) {
    const std::vector<int>& kept = cmapss_kept_sensors();
    if (set.units.empty()) throw ValidationError("save_cmapss: no units to write");
    const std::size_t channels = set.units.front().readings.dim(0);
    if (channels > kept.size()) {
        throw ValidationError("save_cmapss: " + std::to_string(channels) +
                              " channels exceed the " + std::to_string(kept.size()) +
                              " variable sensor slots");
    }
    std::ofstream out(path);
    if (!out) throw IoError("cannot write dataset file: " + path);
    out.precision(6);
    out << std::fixed;
    for (const Trajectory& unit : set.units) {
        for (std::size_t t = 0; t < unit.cycles(); ++t) {
            out << unit.unit_id << ' ' << (t + 1) << " 0.000000 0.000000 100.000000";
            std::size_t next_kept = 0;
            for (int s = 1; s <= kCmapssSensors; ++s) {
                const bool is_kept = std::find(kDroppedSensors.begin(), kDroppedSensors.end(),
                                               s) == kDroppedSensors.end();
                double v = 1.0;  // dropped sensors carry a constant
                if (is_kept) {
                    v = next_kept < channels ? unit.readings.at(next_kept, t) : 0.0;
                    ++next_kept;
                }
                out << ' ' << v;
            }
            out << '\n';
        }
    }
    if (!out) throw IoError("failed writing dataset file: " + path);
}

std::vector<double> compute_condition(const Trajectory& trajectory, double cap) {
    if (trajectory.cycles() == 0) throw ValidationError("compute_condition: empty trajectory");
    if (cap <= 0.0) throw ConfigError("compute_condition: cap must be positive");
    const std::size_t end = trajectory.cycles();
    std::vector<double> condition(end);
    for (std::size_t cycle = 1; cycle <= end; ++cycle) {
        const double remaining = static_cast<double>(end - cycle);
        condition[cycle - 1] = std::min(remaining, cap) / cap;
    }
    return condition;
}

WindowSet window(const TrajectorySet& trajectories, std::size_t length, std::size_t stride,
                 double rul_cap) {
    if (length < 1 || stride < 1) throw ConfigError("window: length and stride must be >= 1");
    WindowSet out;
    out.channel_names = trajectories.channel_names;
    for (const Trajectory& unit : trajectories.units) {
        const std::size_t cycles = unit.cycles();
        if (cycles < length) continue;
        const std::size_t channels = unit.readings.dim(0);
        const std::vector<double> condition = compute_condition(unit, rul_cap);
        for (std::size_t end = length; end <= cycles; end += stride) {
            Array w({channels, length});
            const std::size_t start = end - length;
            for (std::size_t c = 0; c < channels; ++c)
                for (std::size_t l = 0; l < length; ++l) w.at(c, l) = unit.readings.at(c, start + l);
            out.windows.push_back(std::move(w));
            out.conditions.push_back(condition[end - 1]);
            out.provenance.push_back({unit.unit_id, end});
        }
    }
    if (out.windows.empty()) {
        throw ValidationError("window: no unit is at least " + std::to_string(length) +
                              " cycles long");
    }
    return out;
}

NormStats normalize(WindowSet& windows) {
    if (windows.windows.empty()) throw ValidationError("normalize: empty window set");
    const std::size_t channels = windows.channels();
    NormStats stats;
    stats.fitted = true;
    stats.min.assign(channels, std::numeric_limits<double>::infinity());
    stats.max.assign(channels, -std::numeric_limits<double>::infinity());
    for (const Array& w : windows.windows) {
        for (std::size_t c = 0; c < channels; ++c) {
            for (std::size_t l = 0; l < w.dim(1); ++l) {
                stats.min[c] = std::min(stats.min[c], w.at(c, l));
                stats.max[c] = std::max(stats.max[c], w.at(c, l));
            }
        }
    }
    apply_normalize(windows, stats);
    return stats;
}

void apply_normalize(WindowSet& windows, const NormStats& stats) {
    if (!stats.fitted) throw ValidationError("apply_normalize: statistics not fitted");
    const std::size_t channels = windows.channels();
    if (stats.min.size() != channels) {
        throw ShapeError("apply_normalize: statistics cover " + std::to_string(stats.min.size()) +
                         " channels, windows have " + std::to_string(channels));
    }
    for (Array& w : windows.windows) {
        for (std::size_t c = 0; c < channels; ++c) {
            const double range = stats.max[c] - stats.min[c];
            for (std::size_t l = 0; l < w.dim(1); ++l) {
                w.at(c, l) = range > 0.0 ? 2.0 * (w.at(c, l) - stats.min[c]) / range - 1.0 : 0.0;
            }
        }
    }
    windows.stats = stats;
}

Array denormalize(const Array& window, const NormStats& stats) {
    if (!stats.fitted) throw ValidationError("denormalize: statistics not fitted");
    if (window.rank() != 2 || window.dim(0) != stats.min.size()) {
        throw ShapeError("denormalize: window shape " + shape_str(window.shape()) +
                         " does not match statistics");
    }
    Array out(window.shape());
    for (std::size_t c = 0; c < window.dim(0); ++c) {
        const double range = stats.max[c] - stats.min[c];
        for (std::size_t l = 0; l < window.dim(1); ++l) {
            out.at(c, l) = range > 0.0 ? (window.at(c, l) + 1.0) * 0.5 * range + stats.min[c]
                                       : stats.min[c];
        }
    }
    return out;
}

TrajectorySet synth_degradation(const SynthConfig& config) {
    if (config.units < 1 || config.channels < 1 || config.max_cycles < 1) {
        throw ConfigError("synth_degradation: all counts must be >= 1");
    }
    Rng rng(config.seed);
    TrajectorySet set;
    for (std::size_t c = 0; c < config.channels; ++c) {
        set.channel_names.push_back("g" + std::to_string(c + 1));
    }
    const std::size_t min_cycles = std::max<std::size_t>(1, config.max_cycles * 3 / 5);
    for (std::size_t u = 0; u < config.units; ++u) {
        const std::size_t lifetime =
            min_cycles + rng.index(config.max_cycles - min_cycles + 1);
        Array readings({config.channels, lifetime});
        for (std::size_t c = 0; c < config.channels; ++c) {
            const double exponent = rng.uniform(0.7, 2.2);
            const double scale = rng.uniform(0.5, 2.0);
            const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
            const double amp = config.seasonal_amp * rng.uniform(0.5, 1.5);
            const double freq = rng.uniform(1.0, 4.0);
            const double phase = rng.uniform(0.0, 6.283185307179586);
            for (std::size_t t = 0; t < lifetime; ++t) {
                const double u01 = static_cast<double>(t + 1) / static_cast<double>(lifetime);
                const double trend = sign * scale * std::pow(u01, exponent);
                const double seasonal = amp * std::sin(6.283185307179586 * freq * u01 + phase);
                readings.at(c, t) = trend + seasonal + config.noise_std * rng.normal();
            }
        }
        set.units.push_back({static_cast<int>(u + 1), std::move(readings)});
    }
    return set;
}

WindowSet make_mean_coded_windows(std::size_t count, std::size_t channels, std::size_t length,
                                  double noise_std, std::uint64_t seed) {
    if (count < 1 || channels < 1 || length < 1) {
        throw ConfigError("make_mean_coded_windows: all counts must be >= 1");
    }
    Rng rng(seed);
    WindowSet out;
    for (std::size_t c = 0; c < channels; ++c) {
        out.channel_names.push_back("m" + std::to_string(c + 1));
    }
    for (std::size_t i = 0; i < count; ++i) {
        const double condition =
            count > 1 ? static_cast<double>(i) / static_cast<double>(count - 1) : 0.5;
        Array w({channels, length});
        for (std::size_t c = 0; c < channels; ++c) {
            double mean = 0.0;
            for (std::size_t l = 0; l < length; ++l) {
                w.at(c, l) = noise_std * rng.normal();
                mean += w.at(c, l);
            }
            mean /= static_cast<double>(length);
            // recenter so the channel mean equals the condition exactly
            for (std::size_t l = 0; l < length; ++l) w.at(c, l) += condition - mean;
        }
        out.windows.push_back(std::move(w));
        out.conditions.push_back(condition);
        out.provenance.push_back({static_cast<int>(i + 1), length});
    }
    return out;
}

}  // namespace diffmts
