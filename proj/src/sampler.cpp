#include "diffmts/sampler.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace diffmts {

void SampleRequest::validate() const {
    if (count < 1) throw ValidationError("sample: count must be >= 1");
    if (conditions.size() != count) {
        throw ValidationError("sample: expected " + std::to_string(count) + " conditions, got " +
                              std::to_string(conditions.size()));
    }
    for (double c : conditions) {
        if (!(c >= 0.0 && c <= 1.0)) {
            throw ValidationError("sample: condition " + std::to_string(c) + " outside [0, 1]");
        }
    }
}

Array reverse_step(const Array& x_t, std::size_t t, const Array& eps_hat,
                   const ScheduleTable& table, const Array& noise) {
    require_same_shape(x_t, eps_hat, "reverse_step");
    require_same_shape(x_t, noise, "reverse_step noise");
    const PosteriorCoeffs c = posterior_coeffs(table, t);
    const double sigma = std::sqrt(c.variance);
    Array out(x_t.shape());
    for (std::size_t i = 0; i < x_t.size(); ++i) {
        out[i] = c.coef_xt * (x_t[i] - c.coef_eps * eps_hat[i]) + sigma * noise[i];
    }
    return out;
}

SampleSet sample(const Checkpoint& ckpt, const SampleRequest& request) {
    request.validate();
    const TdrUnet model(ckpt.model);
    const ScheduleTable table =
        ScheduleTable::make(ckpt.schedule_kind, ckpt.schedule_steps, ckpt.schedule_offset);
    const std::size_t total_steps = table.total_steps();
    const Shape shape{ckpt.model.in_channels, ckpt.model.length};

    SampleSet out;
    out.windows.reserve(request.count);
    out.conditions = request.conditions;
    for (std::size_t s = 0; s < request.count; ++s) {
        Rng rng = Rng::substream(request.seed, s);
        Array x(shape);
        for (std::size_t i = 0; i < x.size(); ++i) x[i] = rng.normal();
        Array noise(shape);  // zeroed; refilled for every t > 1
        for (std::size_t t = total_steps; t >= 1; --t) {
            const Array eps_hat = model.denoise(ckpt.params, x, t, request.conditions[s]);
            if (t > 1) {
                for (std::size_t i = 0; i < noise.size(); ++i) noise[i] = rng.normal();
            } else {
                noise.fill(0.0);
            }
            x = reverse_step(x, t, eps_hat, table, noise);
        }
        if (request.denormalize && ckpt.norm.fitted) x = denormalize(x, ckpt.norm);
        out.windows.push_back(std::move(x));
    }
    return out;
}

void save_samples_csv(const SampleSet& samples, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write samples: " + path);
    out << "sample_id,channel,t_index,value,condition\n";
    out.precision(17);
    for (std::size_t s = 0; s < samples.windows.size(); ++s) {
        const Array& w = samples.windows[s];
        for (std::size_t c = 0; c < w.dim(0); ++c) {
            for (std::size_t t = 0; t < w.dim(1); ++t) {
                out << s << ',' << c << ',' << t << ',' << w.at(c, t) << ','
                    << samples.conditions[s] << '\n';
            }
        }
    }
    if (!out) throw IoError("failed writing samples: " + path);
}

SampleSet load_samples_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open samples: " + path);
    std::string line;
    if (!std::getline(in, line)) throw FormatError("samples file is empty: " + path, 0);
    if (line.rfind("sample_id,channel,t_index,value,condition", 0) != 0) {
        throw FormatError("unexpected samples header in " + path, 0);
    }

    struct Cell {
        std::size_t sample, channel, t;
        double value, condition;
    };
    std::vector<Cell> cells;
    std::size_t max_sample = 0, max_channel = 0, max_t = 0;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::istringstream ls(line);
        Cell cell{};
        char comma;
        if (!(ls >> cell.sample >> comma >> cell.channel >> comma >> cell.t >> comma >>
              cell.value >> comma >> cell.condition)) {
            throw ParseError("samples line " + std::to_string(line_no) + " is malformed");
        }
        max_sample = std::max(max_sample, cell.sample);
        max_channel = std::max(max_channel, cell.channel);
        max_t = std::max(max_t, cell.t);
        cells.push_back(cell);
    }
    if (cells.empty()) throw FormatError("samples file has no rows: " + path, 0);

    const std::size_t channels = max_channel + 1, length = max_t + 1;
    SampleSet set;
    set.windows.assign(max_sample + 1, Array({channels, length}));
    set.conditions.assign(max_sample + 1, 0.0);
    for (const Cell& cell : cells) {
        set.windows[cell.sample].at(cell.channel, cell.t) = cell.value;
        set.conditions[cell.sample] = cell.condition;
    }
    return set;
}

WindowSet to_window_set(const SampleSet& samples) {
    WindowSet out;
    out.windows = samples.windows;
    out.conditions = samples.conditions;
    for (std::size_t c = 0; c < (samples.windows.empty() ? 0 : samples.windows.front().dim(0));
         ++c) {
        out.channel_names.push_back("c" + std::to_string(c));
    }
    for (std::size_t i = 0; i < samples.windows.size(); ++i) {
        out.provenance.push_back({static_cast<int>(i), 0});
    }
    return out;
}

}  // namespace diffmts
