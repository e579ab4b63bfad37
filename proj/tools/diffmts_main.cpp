// diffmts: generate industrial multivariate time series with a conditional
// diffusion model; train, sample, evaluate, and report from one binary.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "diffmts/checkpoint.hpp"
#include "diffmts/evaluators.hpp"
#include "diffmts/metrics.hpp"
#include "diffmts/run_config.hpp"
#include "diffmts/sampler.hpp"
#include "diffmts/train.hpp"

namespace {

using diffmts::Array;
using diffmts::WindowSet;
using nlohmann::json;

constexpr const char* kVersion = "diffmts 0.1.0";

std::uint64_t text_hash(const std::string& text) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

void write_text(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw diffmts::IoError("cannot write " + path);
    out << text;
    if (!out) throw diffmts::IoError("failed writing " + path);
}

void write_manifest(const std::string& path, const std::string& command, json details) {
    details["command"] = command;
    details["version"] = kVersion;
    write_text(path, details.dump(2) + "\n");
}

std::vector<double> parse_double_list(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok.empty()) continue;
        out.push_back(std::stod(tok));
    }
    return out;
}

std::vector<std::uint64_t> parse_seed_list(const std::string& text) {
    std::vector<std::uint64_t> out;
    std::stringstream ss(text);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok.empty()) continue;
        out.push_back(std::stoull(tok));
    }
    return out;
}

std::uint64_t env_seed_fallback() {
    if (const char* env = std::getenv("DIFFMTS_SEED")) {
        return std::stoull(env);
    }
    return 0;
}

// Options shared by train/sample/eval through the config document.
struct ConfigSource {
    std::string path;  // empty: defaults only
    bool seed_in_file = false;
    diffmts::RunConfig config;

    static ConfigSource load(const std::string& path) {
        ConfigSource src;
        src.path = path;
        if (path.empty()) return src;
        std::ifstream in(path);
        if (!in) throw diffmts::IoError("cannot open config file: " + path);
        std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        src.config = diffmts::parse_run_config(text);
        try {
            src.seed_in_file = json::parse(text).contains("seed");
        } catch (const json::exception&) {
            src.seed_in_file = false;
        }
        return src;
    }
};

WindowSet load_real_windows(const std::string& path, std::size_t length, std::size_t stride,
                            double rul_cap) {
    diffmts::TrajectorySet trajectories = diffmts::load_cmapss(path);
    return diffmts::window(trajectories, length, stride, rul_cap);
}

// ---------------------------------------------------------------- gen-data

struct GenDataArgs {
    diffmts::SynthConfig synth;
    std::string out;
};

int cmd_gen_data(const GenDataArgs& args) {
    diffmts::TrajectorySet set = diffmts::synth_degradation(args.synth);
    diffmts::save_cmapss(set, args.out);

    json sidecar{{"generator",
                  {{"units", args.synth.units},
                   {"channels", args.synth.channels},
                   {"max_cycles", args.synth.max_cycles},
                   {"noise_std", args.synth.noise_std},
                   {"seasonal_amp", args.synth.seasonal_amp},
                   {"seed", args.synth.seed}}}};
    write_text(args.out + ".json", sidecar.dump(2) + "\n");
    write_manifest(args.out + ".manifest.json", "gen-data",
                   json{{"output", args.out},
                        {"output_hash", diffmts::file_hash(args.out)},
                        {"generator", sidecar["generator"]}});
    std::cout << "wrote " << set.units.size() << " units to " << args.out << "\n";
    return 0;
}

// ---------------------------------------------------------------- train

struct TrainArgs {
    ConfigSource source;
    std::string resume_path;
    std::string loss_csv;
    bool quiet = false;
};

int cmd_train(TrainArgs& args) {
    diffmts::RunConfig& cfg = args.source.config;
    if (cfg.data.path.empty()) {
        throw diffmts::ValidationError("train: no dataset path (set data.path or --data)");
    }

    WindowSet windows =
        load_real_windows(cfg.data.path, cfg.data.length, cfg.data.stride, cfg.data.rul_cap);
    diffmts::normalize(windows);

    std::optional<diffmts::Checkpoint> resume;
    if (!args.resume_path.empty()) {
        resume = diffmts::load_checkpoint(args.resume_path);
        cfg.model = resume->model;
        cfg.schedule.kind = resume->schedule_kind;
        cfg.schedule.steps = resume->schedule_steps;
        cfg.schedule.offset = resume->schedule_offset;
    }

    const diffmts::ScheduleTable schedule =
        diffmts::ScheduleTable::make(cfg.schedule.kind, cfg.schedule.steps, cfg.schedule.offset);

    auto log = [&args](std::size_t epoch, const diffmts::LossBreakdown& loss) {
        if (args.quiet) return;
        std::cout << "epoch " << epoch << "  l_noise " << loss.l_noise << "  l_mmd " << loss.l_mmd
                  << "  l_total " << loss.l_total << "  omega " << loss.omega << "\n";
    };
    diffmts::TrainResult result = diffmts::train(windows, cfg.model, schedule, cfg.train,
                                                 resume ? &*resume : nullptr, log);

    diffmts::save_checkpoint(result.checkpoint, cfg.checkpoint_path);

    const std::string loss_path =
        args.loss_csv.empty() ? cfg.checkpoint_path + ".loss.csv" : args.loss_csv;
    {
        std::ostringstream csv;
        csv << "epoch,l_noise,l_mmd,l_total,omega\n";
        csv.precision(17);
        const std::size_t first_epoch =
            resume ? static_cast<std::size_t>(resume->epoch) + 1 : 1;
        for (std::size_t i = 0; i < result.history.size(); ++i) {
            const diffmts::LossBreakdown& l = result.history[i];
            csv << (first_epoch + i) << ',' << l.l_noise << ',' << l.l_mmd << ',' << l.l_total
                << ',' << l.omega << '\n';
        }
        write_text(loss_path, csv.str());
    }

    const std::string effective = diffmts::run_config_to_json(cfg);
    write_manifest(cfg.checkpoint_path + ".manifest.json", "train",
                   json{{"config", json::parse(effective)},
                        {"config_hash", diffmts::config_hash(cfg)},
                        {"config_file", args.source.path},
                        {"dataset", cfg.data.path},
                        {"dataset_hash", diffmts::file_hash(cfg.data.path)},
                        {"resume", args.resume_path},
                        {"checkpoint", cfg.checkpoint_path},
                        {"checkpoint_hash", diffmts::file_hash(cfg.checkpoint_path)},
                        {"loss_csv", loss_path},
                        {"windows", windows.count()},
                        {"seed", cfg.seed}});
    if (!args.quiet) {
        std::cout << "checkpoint " << cfg.checkpoint_path << " (hash "
                  << diffmts::file_hash(cfg.checkpoint_path) << ")\n";
    }
    return 0;
}

// ---------------------------------------------------------------- sample

struct SampleArgs {
    std::string checkpoint;
    std::string out;
    std::string conditions_literal;
    std::string conditions_file;
    std::string match_dataset;
    std::size_t count = 0;  // 0: follow the condition list
    std::size_t stride = 1;
    double rul_cap = 125.0;
    std::uint64_t seed = 0;
    bool raw = false;
};

int cmd_sample(const SampleArgs& args) {
    const diffmts::Checkpoint ckpt = diffmts::load_checkpoint(args.checkpoint);

    std::vector<double> conditions;
    std::string condition_source;
    if (!args.conditions_literal.empty()) {
        conditions = parse_double_list(args.conditions_literal);
        condition_source = "literal";
    } else if (!args.conditions_file.empty()) {
        std::ifstream in(args.conditions_file);
        if (!in) throw diffmts::IoError("cannot open conditions file: " + args.conditions_file);
        double v;
        while (in >> v) conditions.push_back(v);
        condition_source = "file:" + args.conditions_file;
    } else if (!args.match_dataset.empty()) {
        WindowSet real = load_real_windows(args.match_dataset, ckpt.model.length, args.stride,
                                           args.rul_cap);
        conditions = real.conditions;
        condition_source = "match-dataset:" + args.match_dataset;
    } else {
        throw diffmts::ValidationError(
            "sample: provide --conditions, --conditions-file, or --match-dataset");
    }
    if (args.count > 0 && args.count < conditions.size()) conditions.resize(args.count);
    if (args.count > conditions.size()) {
        throw diffmts::ValidationError("sample: --count exceeds the " +
                                       std::to_string(conditions.size()) +
                                       " provided conditions");
    }

    diffmts::SampleRequest request;
    request.count = conditions.size();
    request.conditions = conditions;
    request.seed = args.seed;
    request.denormalize = !args.raw;

    diffmts::SampleSet samples = diffmts::sample(ckpt, request);
    diffmts::save_samples_csv(samples, args.out);

    write_manifest(args.out + ".manifest.json", "sample",
                   json{{"checkpoint", args.checkpoint},
                        {"checkpoint_hash", diffmts::file_hash(args.checkpoint)},
                        {"seed", args.seed},
                        {"count", request.count},
                        {"conditions_source", condition_source},
                        {"denormalized", !args.raw},
                        {"schedule",
                         {{"kind", diffmts::to_string(ckpt.schedule_kind)},
                          {"steps", ckpt.schedule_steps},
                          {"offset", ckpt.schedule_offset}}},
                        {"output", args.out},
                        {"output_hash", diffmts::file_hash(args.out)}});
    std::cout << "wrote " << request.count << " samples to " << args.out << "\n";
    return 0;
}

// ---------------------------------------------------------------- eval

struct EvalArgs {
    ConfigSource source;
    std::string real_path;
    std::string synth_path;
    std::string out;
    std::string pca_csv;
    std::string seeds_literal;
    std::size_t stride = 1;
    double rul_cap = 125.0;
};

int cmd_eval(EvalArgs& args) {
    const diffmts::RunConfig& cfg = args.source.config;
    diffmts::SampleSet synth_samples = diffmts::load_samples_csv(args.synth_path);
    WindowSet synth = diffmts::to_window_set(synth_samples);
    WindowSet real =
        load_real_windows(args.real_path, synth.length(), args.stride, args.rul_cap);
    if (real.channels() != synth.channels() || real.length() != synth.length()) {
        throw diffmts::ValidationError(
            "eval: real windows are (" + std::to_string(real.channels()) + ", " +
            std::to_string(real.length()) + ") but synthetic are (" +
            std::to_string(synth.channels()) + ", " + std::to_string(synth.length()) + ")");
    }

    std::vector<std::uint64_t> seeds = args.seeds_literal.empty()
                                           ? cfg.effective_seeds()
                                           : parse_seed_list(args.seeds_literal);
    if (seeds.empty()) throw diffmts::ValidationError("eval: seed list is empty");

    json per_seed = json::array();
    double disc_mean = 0.0, pred_mean = 0.0;
    for (std::uint64_t seed : seeds) {
        const double disc = diffmts::discriminative_score(real, synth, cfg.eval.net, seed);
        const double pred = diffmts::predictive_score(synth, real, cfg.eval.net, seed);
        disc_mean += disc;
        pred_mean += pred;
        per_seed.push_back(json{{"seed", seed}, {"discriminative", disc}, {"predictive", pred}});
    }
    disc_mean /= static_cast<double>(seeds.size());
    pred_mean /= static_cast<double>(seeds.size());

    const diffmts::DistanceReport distances = diffmts::distance_report(real, synth, cfg.eval.jobs);

    // pooled PCA export for external plotting
    std::vector<Array> pooled;
    for (const Array& w : real.windows) pooled.push_back(w);
    for (const Array& w : synth.windows) pooled.push_back(w);
    const diffmts::Projection proj = diffmts::pca_project(pooled, 2);
    const std::string pca_path = args.pca_csv.empty() ? args.out + ".pca.csv" : args.pca_csv;
    {
        std::ostringstream csv;
        csv << "sample_id,source,pc1,pc2\n";
        csv.precision(17);
        for (std::size_t i = 0; i < pooled.size(); ++i) {
            const bool is_real = i < real.windows.size();
            csv << (is_real ? i : i - real.windows.size()) << ','
                << (is_real ? "real" : "synth") << ',' << proj.coords[i][0] << ','
                << proj.coords[i][1] << '\n';
        }
        write_text(pca_path, csv.str());
    }

    const std::size_t pooled_n = real.count() + synth.count();
    json report{{"discriminative_score", disc_mean},
                {"predictive_score", pred_mean},
                {"dtw_mean", distances.dtw_mean},
                {"frechet_mean", distances.frechet_mean},
                {"pairs", distances.pairs},
                {"seeds", seeds},
                {"per_seed", per_seed},
                {"split",
                 {{"train", pooled_n * 7 / 10},
                  {"val", pooled_n / 10},
                  {"test", pooled_n - pooled_n * 7 / 10 - pooled_n / 10}}},
                {"real_count", real.count()},
                {"synth_count", synth.count()},
                {"explained_variance_ratio", proj.explained_variance_ratio}};
    write_text(args.out, report.dump(2) + "\n");

    write_manifest(args.out + ".manifest.json", "eval",
                   json{{"real", args.real_path},
                        {"real_hash", diffmts::file_hash(args.real_path)},
                        {"synth", args.synth_path},
                        {"synth_hash", diffmts::file_hash(args.synth_path)},
                        {"seeds", seeds},
                        {"stride", args.stride},
                        {"rul_cap", args.rul_cap},
                        {"report", args.out},
                        {"pca_csv", pca_path},
                        {"config_hash", diffmts::config_hash(cfg)}});

    std::cout << "discriminative " << disc_mean << "  predictive " << pred_mean << "  dtw "
              << distances.dtw_mean << "  frechet " << distances.frechet_mean << "\n";
    return 0;
}

// ---------------------------------------------------------------- report

struct ReportArgs {
    std::vector<std::string> rows;  // name=path pairs
    std::string out;
    std::string gnuplot_samples;
    std::string gnuplot_out;
    std::string channels = "0";
};

int cmd_report(const ReportArgs& args) {
    if (!args.gnuplot_samples.empty()) {
        diffmts::SampleSet samples = diffmts::load_samples_csv(args.gnuplot_samples);
        const std::string gp = args.gnuplot_out.empty() ? args.gnuplot_samples + ".gp"
                                                        : args.gnuplot_out;
        std::ostringstream script;
        script << "# gnuplot overlay for " << args.gnuplot_samples << "\n"
               << "set datafile separator ','\n"
               << "set key outside\n"
               << "set xlabel 'time index'\n"
               << "set ylabel 'value'\n";
        std::vector<double> channels = parse_double_list(args.channels);
        script << "plot ";
        bool first = true;
        for (double ch : channels) {
            const int c = static_cast<int>(ch);
            if (!first) script << ", \\\n     ";
            script << "'" << args.gnuplot_samples << "' using 3:($2==" << c
                   << " && $1==0 ? $4 : 1/0) with lines title 'channel " << c << "'";
            first = false;
        }
        script << "\n";
        write_text(gp, script.str());
        std::cout << "wrote " << gp << "\n";
        return 0;
    }

    if (args.rows.empty()) {
        throw diffmts::ValidationError("report: provide --row name=report.json or --samples");
    }
    std::ostringstream table;
    table << "| Variant | Discriminative | Predictive | DTW | FD |\n";
    table << "|---------|----------------|------------|-----|----|\n";
    for (const std::string& row : args.rows) {
        const std::size_t eq = row.find('=');
        if (eq == std::string::npos) {
            throw diffmts::ValidationError("report: row '" + row + "' is not name=path");
        }
        const std::string name = row.substr(0, eq);
        const std::string path = row.substr(eq + 1);
        std::ifstream in(path);
        if (!in) throw diffmts::IoError("cannot open report: " + path);
        json j;
        try {
            in >> j;
        } catch (const json::exception& e) {
            throw diffmts::FormatError("report " + path + " is not valid JSON: " + e.what(), 0);
        }
        table << "| " << name << " | " << j.value("discriminative_score", 0.0) << " | "
              << j.value("predictive_score", 0.0) << " | " << j.value("dtw_mean", 0.0) << " | "
              << j.value("frechet_mean", 0.0) << " |\n";
    }
    if (args.out.empty()) {
        std::cout << table.str();
    } else {
        write_text(args.out, table.str());
        std::cout << "wrote " << args.out << "\n";
    }
    return 0;
}

int map_exception(const std::exception& e) {
    if (dynamic_cast<const diffmts::IoError*>(&e) || dynamic_cast<const diffmts::FormatError*>(&e) ||
        dynamic_cast<const diffmts::ParseError*>(&e) ||
        dynamic_cast<const diffmts::VersionError*>(&e)) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    }
    if (dynamic_cast<const diffmts::Error*>(&e)) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
    std::cerr << "internal error: " << e.what() << "\n";
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"conditional diffusion synthesis for industrial multivariate time series"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);

    // gen-data
    GenDataArgs gen;
    bool gen_seed_given = false;
    CLI::App* gen_cmd = app.add_subcommand("gen-data", "write a synthetic degradation dataset");
    gen_cmd->add_option("--units", gen.synth.units, "number of units");
    gen_cmd->add_option("--channels", gen.synth.channels, "sensor channels (max 14)");
    gen_cmd->add_option("--max-cycles", gen.synth.max_cycles, "maximum unit lifetime");
    gen_cmd->add_option("--noise-std", gen.synth.noise_std, "additive noise level");
    gen_cmd->add_option("--seasonal-amp", gen.synth.seasonal_amp, "sinusoid amplitude");
    gen_cmd->add_option("--seed", gen.synth.seed, "generator seed")
        ->each([&gen_seed_given](const std::string&) { gen_seed_given = true; });
    gen_cmd->add_option("--out", gen.out, "output dataset path")->required();

    // train
    TrainArgs train_args;
    std::string train_config_path, train_data, train_out, train_schedule, train_precision;
    std::uint64_t train_seed = 0;
    bool train_seed_given = false;
    std::size_t train_epochs = 0, train_batch = 0, train_steps = 0, train_length = 0,
                train_base_filters = 0, train_in_channels = 0, train_stride = 0;
    double train_lr = 0.0, train_mask_alpha = -1.0, train_omega_value = -1.0;
    bool train_no_mmd = false, train_no_decomposition = false, train_no_attention = false,
         train_omega_fixed = false, train_post_tdr = false;
    CLI::App* train_cmd = app.add_subcommand("train", "train the diffusion model");
    train_cmd->add_option("--config", train_config_path, "run config JSON");
    train_cmd->add_option("--data", train_data, "dataset path override");
    train_cmd->add_option("--out", train_out, "checkpoint path override");
    train_cmd->add_option("--loss-csv", train_args.loss_csv, "loss history CSV path");
    train_cmd->add_option("--resume", train_args.resume_path, "checkpoint to resume");
    train_cmd->add_option("--epochs", train_epochs, "epoch count override");
    train_cmd->add_option("--batch-size", train_batch, "batch size override");
    train_cmd->add_option("--lr", train_lr, "learning rate override");
    train_cmd->add_option("--length", train_length, "window length override");
    train_cmd->add_option("--stride", train_stride, "window stride override");
    train_cmd->add_option("--base-filters", train_base_filters, "model width override");
    train_cmd->add_option("--in-channels", train_in_channels, "model channels override");
    train_cmd->add_option("--schedule", train_schedule, "schedule kind (linear|cosine)");
    train_cmd->add_option("--steps", train_steps, "diffusion steps T");
    train_cmd->add_option("--mask-alpha", train_mask_alpha, "condition mask fraction");
    train_cmd->add_option("--precision", train_precision, "f32 or f64");
    train_cmd->add_option("--seed", train_seed, "training seed")
        ->each([&train_seed_given](const std::string&) { train_seed_given = true; });
    train_cmd->add_flag("--no-mmd", train_no_mmd, "disable the MMD regularizer");
    train_cmd->add_flag("--no-decomposition", train_no_decomposition,
                        "disable the trend/peak decomposition");
    train_cmd->add_flag("--no-attention", train_no_attention, "disable the attention block");
    train_cmd->add_flag("--post-decoder-tdr", train_post_tdr,
                        "add a second decomposition stage after the decoder");
    train_cmd->add_flag("--omega-fixed", train_omega_fixed, "pin omega instead of learning it");
    train_cmd->add_option("--omega-value", train_omega_value, "fixed omega value");
    train_cmd->add_flag("--quiet", train_args.quiet, "suppress progress lines");

    // sample
    SampleArgs sample_args;
    bool sample_seed_given = false;
    CLI::App* sample_cmd = app.add_subcommand("sample", "draw synthetic windows");
    sample_cmd->add_option("--checkpoint", sample_args.checkpoint, "trained model")->required();
    sample_cmd->add_option("--out", sample_args.out, "output CSV path")->required();
    sample_cmd->add_option("--count", sample_args.count, "sample count cap");
    sample_cmd->add_option("--conditions", sample_args.conditions_literal,
                           "comma-separated condition list");
    sample_cmd->add_option("--conditions-file", sample_args.conditions_file,
                           "file with one condition per line");
    sample_cmd->add_option("--match-dataset", sample_args.match_dataset,
                           "replicate a real dataset's condition labels");
    sample_cmd->add_option("--stride", sample_args.stride, "windowing stride for match-dataset");
    sample_cmd->add_option("--rul-cap", sample_args.rul_cap, "condition cap for match-dataset");
    sample_cmd->add_flag("--raw", sample_args.raw, "skip de-normalization");
    sample_cmd->add_option("--seed", sample_args.seed, "sampling seed")
        ->each([&sample_seed_given](const std::string&) { sample_seed_given = true; });

    // eval
    EvalArgs eval_args;
    std::string eval_config_path;
    std::size_t eval_epochs = 0, eval_jobs = 0;
    CLI::App* eval_cmd = app.add_subcommand("eval", "score synthetic against real data");
    eval_cmd->add_option("--config", eval_config_path, "run config JSON");
    eval_cmd->add_option("--real", eval_args.real_path, "real dataset path")->required();
    eval_cmd->add_option("--synth", eval_args.synth_path, "synthetic samples CSV")->required();
    eval_cmd->add_option("--out", eval_args.out, "report JSON path")->required();
    eval_cmd->add_option("--pca-csv", eval_args.pca_csv, "PCA projection CSV path");
    eval_cmd->add_option("--seeds", eval_args.seeds_literal, "comma-separated seed list");
    eval_cmd->add_option("--stride", eval_args.stride, "real-data windowing stride");
    eval_cmd->add_option("--rul-cap", eval_args.rul_cap, "condition cap");
    eval_cmd->add_option("--eval-epochs", eval_epochs, "evaluator epochs override");
    eval_cmd->add_option("--jobs", eval_jobs, "distance worker threads");

    // report
    ReportArgs report_args;
    CLI::App* report_cmd = app.add_subcommand("report", "tabulate eval reports or emit plots");
    report_cmd->add_option("--row", report_args.rows, "name=report.json (repeatable)");
    report_cmd->add_option("--out", report_args.out, "output path (stdout when omitted)");
    report_cmd->add_option("--samples", report_args.gnuplot_samples,
                           "samples CSV for a gnuplot overlay script");
    report_cmd->add_option("--gnuplot-out", report_args.gnuplot_out, "script output path");
    report_cmd->add_option("--channels", report_args.channels, "channels to plot");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (gen_cmd->parsed()) {
            if (!gen_seed_given) gen.synth.seed = env_seed_fallback();
            return cmd_gen_data(gen);
        }
        if (train_cmd->parsed()) {
            train_args.source = ConfigSource::load(train_config_path);
            diffmts::RunConfig& cfg = train_args.source.config;
            if (train_seed_given) {
                cfg.seed = train_seed;
            } else if (!train_args.source.seed_in_file) {
                cfg.seed = env_seed_fallback();
            }
            cfg.train.seed = cfg.seed;
            if (!train_data.empty()) cfg.data.path = train_data;
            if (!train_out.empty()) cfg.checkpoint_path = train_out;
            if (train_epochs) cfg.train.epochs = train_epochs;
            if (train_batch) cfg.train.batch_size = train_batch;
            if (train_lr > 0.0) cfg.train.adam.lr = train_lr;
            if (train_length) {
                cfg.data.length = train_length;
                cfg.model.length = train_length;
            }
            if (train_stride) cfg.data.stride = train_stride;
            if (train_base_filters) cfg.model.base_filters = train_base_filters;
            if (train_in_channels) cfg.model.in_channels = train_in_channels;
            if (!train_schedule.empty()) {
                cfg.schedule.kind = diffmts::schedule_kind_from_string(train_schedule);
            }
            if (train_steps) cfg.schedule.steps = train_steps;
            if (train_mask_alpha >= 0.0) cfg.model.mask_alpha = train_mask_alpha;
            if (!train_precision.empty()) {
                cfg.train.precision = diffmts::precision_from_string(train_precision);
            }
            if (train_no_mmd) cfg.train.mmd_enabled = false;
            if (train_no_decomposition) cfg.model.use_decomposition = false;
            if (train_no_attention) cfg.model.use_attention = false;
            if (train_post_tdr) cfg.model.post_decoder_tdr = true;
            if (train_omega_fixed) cfg.train.omega_learnable = false;
            if (train_omega_value >= 0.0) cfg.train.omega_fixed_value = train_omega_value;
            return cmd_train(train_args);
        }
        if (sample_cmd->parsed()) {
            if (!sample_seed_given) sample_args.seed = env_seed_fallback();
            return cmd_sample(sample_args);
        }
        if (eval_cmd->parsed()) {
            eval_args.source = ConfigSource::load(eval_config_path);
            if (eval_epochs) eval_args.source.config.eval.net.epochs = eval_epochs;
            if (eval_jobs) eval_args.source.config.eval.jobs = eval_jobs;
            return cmd_eval(eval_args);
        }
        if (report_cmd->parsed()) {
            return cmd_report(report_args);
        }
    } catch (const std::exception& e) {
        return map_exception(e);
    }
    return 0;
}
