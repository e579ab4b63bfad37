#include "diffmts/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace diffmts {

namespace {

// fixed substream ids so restored runs regenerate identical draws
enum StreamId : std::uint64_t { kInit = 0, kShuffle = 1, kNoise = 2, kTimestep = 3, kMask = 4 };

Array clamp_unit(const Array& x) {
    Array out(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = std::clamp(x[i], -1.0, 1.0);
    return out;
}

Array draw_normal(Rng& rng, const Shape& shape) {
    Array out(shape);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = rng.normal();
    return out;
}

}  // namespace

TrainResult train(const WindowSet& data, const ModelConfig& model_config,
                  const ScheduleTable& schedule, const TrainConfig& config,
                  const Checkpoint* resume, const EpochCallback& on_epoch) {
    config.validate();
    model_config.validate();
    if (data.windows.empty()) throw ValidationError("train: dataset is empty");
    if (data.channels() != model_config.in_channels || data.length() != model_config.length) {
        throw ValidationError("train: dataset windows are (" + std::to_string(data.channels()) +
                              ", " + std::to_string(data.length()) + ") but the model expects (" +
                              std::to_string(model_config.in_channels) + ", " +
                              std::to_string(model_config.length) + ")");
    }
    if (data.conditions.size() != data.windows.size()) {
        throw ValidationError("train: every window needs a paired condition");
    }

    const TdrUnet model(model_config);
    const std::size_t total_steps = schedule.total_steps();

    ParamMap params;
    AdamState adam;
    Rng shuffle_rng = Rng::substream(config.seed, kShuffle);
    Rng noise_rng = Rng::substream(config.seed, kNoise);
    Rng t_rng = Rng::substream(config.seed, kTimestep);
    Rng mask_rng = Rng::substream(config.seed, kMask);
    std::size_t start_epoch = 0;

    if (resume) {
        params = resume->params;
        adam = resume->adam;
        start_epoch = static_cast<std::size_t>(resume->epoch);
        auto restore = [&](const char* name, Rng& rng) {
            auto it = resume->rng_state.find(name);
            if (it == resume->rng_state.end()) {
                throw ValidationError(std::string("resume: checkpoint lacks rng state '") + name +
                                      "'");
            }
            rng.set_state(it->second);
        };
        restore("shuffle", shuffle_rng);
        restore("noise", noise_rng);
        restore("t", t_rng);
        restore("mask", mask_rng);
    } else {
        Rng init_rng = Rng::substream(config.seed, kInit);
        params = model.init_params(init_rng);
        adam = AdamState::init(params);
        if (config.precision == Precision::F32) {
            round_to_f32(params);
        }
    }
    if (start_epoch >= config.epochs) {
        throw ValidationError("train: checkpoint is already at epoch " +
                              std::to_string(start_epoch));
    }

    AdaMmdOptions loss_options;
    loss_options.mmd_enabled = config.mmd_enabled;
    loss_options.kernel = config.kernel;
    if (!config.omega_learnable) loss_options.fixed_omega = config.omega_fixed_value;

    std::vector<LossBreakdown> history;
    history.reserve(config.epochs);

    std::vector<std::size_t> order(data.windows.size());
    for (std::size_t epoch = start_epoch + 1; epoch <= config.epochs; ++epoch) {
        std::iota(order.begin(), order.end(), std::size_t{0});
        shuffle_rng.shuffle(order);

        LossBreakdown epoch_mean{};
        std::size_t seen = 0;
        for (std::size_t batch_start = 0, batch_no = 0; batch_start < order.size();
             batch_start += config.batch_size, ++batch_no) {
            const std::size_t batch_end =
                std::min(batch_start + config.batch_size, order.size());
            const std::size_t batch = batch_end - batch_start;

            Tape tape;
            TapeParams tp = bind_params(tape, params, true);
            std::vector<Value> eps_batch, eps_hat_batch;
            eps_batch.reserve(batch);
            eps_hat_batch.reserve(batch);
            for (std::size_t i = batch_start; i < batch_end; ++i) {
                const std::size_t idx = order[i];
                const Array x0 = clamp_unit(data.windows[idx]);
                const Array eps = draw_normal(noise_rng, x0.shape());
                const std::size_t t = 1 + t_rng.index(total_steps);
                const Array x_t = q_sample(x0, t, eps, schedule);
                Value eps_hat = model.forward(tape, tp, tape.constant(x_t), t,
                                              data.conditions[idx], RunMode::Train, &mask_rng);
                eps_batch.push_back(tape.constant(eps));
                eps_hat_batch.push_back(eps_hat);
            }

            AdaMmdResult loss =
                ada_mmd_loss(tape, eps_batch, eps_hat_batch, tp.at("omega_logit"), loss_options);
            if (!std::isfinite(loss.breakdown.l_total)) {
                throw TrainingError(
                    "train: non-finite loss at epoch " + std::to_string(epoch) + " batch " +
                    std::to_string(batch_no) + " (l_noise=" + std::to_string(loss.breakdown.l_noise) +
                    ", l_mmd=" + std::to_string(loss.breakdown.l_mmd) + ")");
            }

            tape.backward(loss.total);
            ParamMap grads;
            for (const auto& [name, value] : tp) grads.emplace(name, tape.grad(value));
            if (config.grad_clip > 0.0) clip_grad_norm(grads, config.grad_clip);
            adam_step(params, grads, adam, config.adam);
            if (config.precision == Precision::F32) {
                round_to_f32(params);
                round_to_f32(adam.m);
                round_to_f32(adam.v);
            }

            epoch_mean.l_noise += loss.breakdown.l_noise * static_cast<double>(batch);
            epoch_mean.l_mmd += loss.breakdown.l_mmd * static_cast<double>(batch);
            epoch_mean.l_total += loss.breakdown.l_total * static_cast<double>(batch);
            epoch_mean.omega += loss.breakdown.omega * static_cast<double>(batch);
            seen += batch;
        }
        const double inv = 1.0 / static_cast<double>(seen);
        epoch_mean.l_noise *= inv;
        epoch_mean.l_mmd *= inv;
        epoch_mean.l_total *= inv;
        epoch_mean.omega *= inv;
        history.push_back(epoch_mean);
        if (on_epoch && (epoch % std::max<std::size_t>(config.log_every, 1) == 0)) {
            on_epoch(epoch, epoch_mean);
        }
    }

    TrainResult result;
    result.history = std::move(history);
    Checkpoint& ckpt = result.checkpoint;
    ckpt.model = model_config;
    ckpt.schedule_kind = schedule.kind();
    ckpt.schedule_steps = schedule.total_steps();
    ckpt.schedule_offset = schedule.offset();
    ckpt.precision = config.precision;
    ckpt.params = std::move(params);
    ckpt.adam = std::move(adam);
    ckpt.epoch = static_cast<std::int64_t>(config.epochs);
    ckpt.rng_state["shuffle"] = shuffle_rng.state();
    ckpt.rng_state["noise"] = noise_rng.state();
    ckpt.rng_state["t"] = t_rng.state();
    ckpt.rng_state["mask"] = mask_rng.state();
    ckpt.norm = data.stats;
    return result;
}

}  // namespace diffmts
