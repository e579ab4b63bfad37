#include "diffmts/evaluators.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace diffmts {

LstmNet::LstmNet(std::size_t input_dim, const EvalNetConfig& config)
    : input_dim_(input_dim), config_(config) {
    if (input_dim_ == 0 || config_.hidden == 0 || config_.layers == 0) {
        throw ConfigError("lstm: dims and layer count must be positive");
    }
}

ParamMap LstmNet::init_params(Rng& rng) const {
    ParamMap params;
    auto matrix = [&rng](Shape shape, std::size_t fan_in) {
        Array w(std::move(shape));
        const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
        for (std::size_t i = 0; i < w.size(); ++i) w[i] = rng.uniform(-bound, bound);
        return w;
    };
    const std::size_t h = config_.hidden;
    for (std::size_t l = 0; l < config_.layers; ++l) {
        const std::size_t in = l == 0 ? input_dim_ : h;
        const std::string prefix = "l" + std::to_string(l) + ".";
        params.emplace(prefix + "wx", matrix({4 * h, in}, in));
        params.emplace(prefix + "wh", matrix({4 * h, h}, h));
        Array bias({4 * h});
        for (std::size_t i = h; i < 2 * h; ++i) bias[i] = 1.0;  // forget gate starts open
        params.emplace(prefix + "b", std::move(bias));
    }
    params.emplace("head.w", matrix({1, h}, h));
    params.emplace("head.b", Array({1}));
    return params;
}

Value LstmNet::forward(Tape& tape, const TapeParams& p, const Array& window) const {
    if (window.rank() != 2 || window.dim(0) != input_dim_) {
        throw ShapeError("lstm: expected (" + std::to_string(input_dim_) +
                         ", L) window, got " + shape_str(window.shape()));
    }
    const std::size_t h = config_.hidden;
    const std::size_t length = window.dim(1);
    Value zero_bias = tape.constant(Array({4 * h}));
    Value zero_state = tape.constant(Array({h}));

    std::vector<Value> hidden(config_.layers, zero_state);
    std::vector<Value> cell(config_.layers, zero_state);
    for (std::size_t t = 0; t < length; ++t) {
        Array col({input_dim_});
        for (std::size_t c = 0; c < input_dim_; ++c) col[c] = window.at(c, t);
        Value x = tape.constant(std::move(col));
        for (std::size_t l = 0; l < config_.layers; ++l) {
            const std::string prefix = "l" + std::to_string(l) + ".";
            Value pre = tape.add(
                tape.linear(p.at(prefix + "wx"), x, p.at(prefix + "b")),
                tape.linear(p.at(prefix + "wh"), hidden[l], zero_bias));
            Value gi = tape.activation(tape.slice_axis0(pre, 0, h), ops::Act::Sigmoid);
            Value gf = tape.activation(tape.slice_axis0(pre, h, 2 * h), ops::Act::Sigmoid);
            Value gg = tape.activation(tape.slice_axis0(pre, 2 * h, 3 * h), ops::Act::Tanh);
            Value go = tape.activation(tape.slice_axis0(pre, 3 * h, 4 * h), ops::Act::Sigmoid);
            cell[l] = tape.add(tape.mul(gf, cell[l]), tape.mul(gi, gg));
            hidden[l] = tape.mul(go, tape.activation(cell[l], ops::Act::Tanh));
            x = hidden[l];
        }
    }
    return tape.linear(p.at("head.w"), hidden.back(), p.at("head.b"));
}

namespace {

// per-channel standardization fitted on the training portion; keeps the
// recurrent nets well-conditioned regardless of the corpus scale
struct Standardizer {
    std::vector<double> mean, std;

    static Standardizer fit(const std::vector<const Array*>& windows) {
        Standardizer s;
        const std::size_t channels = windows.front()->dim(0);
        s.mean.assign(channels, 0.0);
        s.std.assign(channels, 0.0);
        std::size_t count = 0;
        for (const Array* w : windows) {
            for (std::size_t c = 0; c < channels; ++c)
                for (std::size_t l = 0; l < w->dim(1); ++l) s.mean[c] += w->at(c, l);
            count += w->dim(1);
        }
        for (double& m : s.mean) m /= static_cast<double>(count);
        for (const Array* w : windows) {
            for (std::size_t c = 0; c < channels; ++c)
                for (std::size_t l = 0; l < w->dim(1); ++l) {
                    const double d = w->at(c, l) - s.mean[c];
                    s.std[c] += d * d;
                }
        }
        for (double& v : s.std) v = std::sqrt(v / static_cast<double>(count));
        return s;
    }

    Array apply(const Array& w) const {
        Array out(w.shape());
        for (std::size_t c = 0; c < w.dim(0); ++c) {
            const double denom = std[c] > 1e-12 ? std[c] : 1.0;
            for (std::size_t l = 0; l < w.dim(1); ++l) out.at(c, l) = (w.at(c, l) - mean[c]) / denom;
        }
        return out;
    }
};

struct LabeledSet {
    std::vector<Array> windows;
    std::vector<double> targets;
};

// Adam-trains the net on (window, target) pairs with the given per-sample
// loss builder; returns the trained parameters.
template <typename LossFn>
ParamMap train_net(const LstmNet& net, const LabeledSet& train, const EvalNetConfig& config,
                   Rng& rng, const LossFn& sample_loss) {
    ParamMap params = net.init_params(rng);
    AdamState adam = AdamState::init(params);
    AdamConfig adam_cfg;
    adam_cfg.lr = config.lr;
    std::vector<std::size_t> order(train.windows.size());
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        rng.shuffle(order);
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t end = std::min(start + config.batch_size, order.size());
            Tape tape;
            TapeParams tp = bind_params(tape, params, true);
            Value loss;
            bool first = true;
            for (std::size_t i = start; i < end; ++i) {
                Value out = net.forward(tape, tp, train.windows[order[i]]);
                Value term = sample_loss(tape, out, train.targets[order[i]]);
                loss = first ? term : tape.add(loss, term);
                first = false;
            }
            loss = tape.scale(loss, 1.0 / static_cast<double>(end - start));
            tape.backward(loss);
            ParamMap grads;
            for (const auto& [name, value] : tp) grads.emplace(name, tape.grad(value));
            clip_grad_norm(grads, 1.0);
            adam_step(params, grads, adam, adam_cfg);
        }
    }
    return params;
}

double net_output(const LstmNet& net, const ParamMap& params, const Array& window) {
    Tape tape(false);
    TapeParams tp = bind_params(tape, params, false);
    return net.forward(tape, tp, window).array()[0];
}

}  // namespace

double discriminative_score(const WindowSet& real, const WindowSet& synth,
                            const EvalNetConfig& config, std::uint64_t seed) {
    if (real.count() < 10 || synth.count() < 10) {
        throw ValidationError("discriminative_score: need at least 10 samples per class");
    }
    if (real.channels() != synth.channels() || real.length() != synth.length()) {
        throw ValidationError("discriminative_score: real windows are (" +
                              std::to_string(real.channels()) + ", " +
                              std::to_string(real.length()) + "), synthetic are (" +
                              std::to_string(synth.channels()) + ", " +
                              std::to_string(synth.length()) + ")");
    }

    // pool with labels real=1 / synth=0, shuffle, split 70/10/20
    std::vector<const Array*> pool;
    std::vector<double> labels;
    for (const Array& w : real.windows) {
        pool.push_back(&w);
        labels.push_back(1.0);
    }
    for (const Array& w : synth.windows) {
        pool.push_back(&w);
        labels.push_back(0.0);
    }
    Rng rng = Rng::substream(seed, 101);
    std::vector<std::size_t> order(pool.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    rng.shuffle(order);

    const std::size_t n = pool.size();
    const std::size_t n_train = n * 7 / 10;
    const std::size_t n_val = n / 10;  // reserved by the protocol; not used for selection
    const std::size_t n_test = n - n_train - n_val;
    if (n_train == 0 || n_test == 0) {
        throw ValidationError("discriminative_score: split leaves an empty partition");
    }

    std::vector<const Array*> train_ptrs;
    for (std::size_t i = 0; i < n_train; ++i) train_ptrs.push_back(pool[order[i]]);
    const Standardizer stz = Standardizer::fit(train_ptrs);

    LabeledSet train;
    for (std::size_t i = 0; i < n_train; ++i) {
        train.windows.push_back(stz.apply(*pool[order[i]]));
        train.targets.push_back(labels[order[i]]);
    }

    LstmNet net(real.channels(), config);
    // binary cross-entropy on the logit: y*softplus(-l) + (1-y)*softplus(l)
    auto bce = [](Tape& tape, Value logit, double y) {
        Value sp_neg = tape.activation(tape.scale(logit, -1.0), ops::Act::Softplus);
        Value sp_pos = tape.activation(logit, ops::Act::Softplus);
        return tape.add(tape.scale(sp_neg, y), tape.scale(sp_pos, 1.0 - y));
    };
    ParamMap params = train_net(net, train, config, rng, bce);

    std::size_t correct = 0;
    for (std::size_t i = n_train + n_val; i < n; ++i) {
        const double logit = net_output(net, params, stz.apply(*pool[order[i]]));
        const double predicted = logit > 0.0 ? 1.0 : 0.0;
        if (predicted == labels[order[i]]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(n_test);
}

double predictive_score(const WindowSet& synth_train, const WindowSet& real_test,
                        const EvalNetConfig& config, std::uint64_t seed) {
    if (synth_train.windows.empty() || real_test.windows.empty()) {
        throw ValidationError("predictive_score: both window sets must be non-empty");
    }
    if (synth_train.conditions.size() != synth_train.windows.size() ||
        real_test.conditions.size() != real_test.windows.size()) {
        throw ValidationError("predictive_score: windows must carry conditions");
    }
    if (synth_train.channels() != real_test.channels() ||
        synth_train.length() != real_test.length()) {
        throw ValidationError("predictive_score: window shapes differ between sets");
    }

    Rng rng = Rng::substream(seed, 202);
    std::vector<const Array*> train_ptrs;
    for (const Array& w : synth_train.windows) train_ptrs.push_back(&w);
    const Standardizer stz = Standardizer::fit(train_ptrs);

    LabeledSet train;
    for (std::size_t i = 0; i < synth_train.windows.size(); ++i) {
        train.windows.push_back(stz.apply(synth_train.windows[i]));
        train.targets.push_back(synth_train.conditions[i]);
    }

    LstmNet net(synth_train.channels(), config);
    auto mse = [](Tape& tape, Value out, double target) {
        Value diff = tape.add_scalar(out, -target);
        return tape.mul(diff, diff);
    };
    ParamMap params = train_net(net, train, config, rng, mse);

    double sq = 0.0;
    for (std::size_t i = 0; i < real_test.windows.size(); ++i) {
        const double pred = net_output(net, params, stz.apply(real_test.windows[i]));
        const double d = pred - real_test.conditions[i];
        sq += d * d;
    }
    return std::sqrt(sq / static_cast<double>(real_test.windows.size()));
}

}  // namespace diffmts
