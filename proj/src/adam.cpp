#include "diffmts/adam.hpp"

#include <cmath>

namespace diffmts {

AdamState AdamState::init(const ParamMap& params) {
    AdamState s;
    for (const auto& [name, p] : params) {
        s.m.emplace(name, Array(p.shape()));
        s.v.emplace(name, Array(p.shape()));
    }
    s.step = 0;
    return s;
}

void adam_step(ParamMap& params, const ParamMap& grads, AdamState& state, const AdamConfig& cfg) {
    if (cfg.beta1 < 0.0 || cfg.beta1 >= 1.0 || cfg.beta2 < 0.0 || cfg.beta2 >= 1.0) {
        throw ConfigError("adam: betas must lie in [0, 1)");
    }
    state.step += 1;
    const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
    for (auto& [name, p] : params) {
        auto git = grads.find(name);
        if (git == grads.end()) continue;
        Array& m = state.m.at(name);
        Array& v = state.v.at(name);
        const Array& g = git->second;
        require_same_shape(p, g, "adam gradient");
        for (std::size_t i = 0; i < p.size(); ++i) {
            if (!std::isfinite(g[i])) {
                throw TrainingError("adam: non-finite gradient for parameter '" + name + "'");
            }
            m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g[i];
            v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
            const double mhat = m[i] / bc1;
            const double vhat = v[i] / bc2;
            p[i] -= cfg.lr * mhat / (std::sqrt(vhat) + cfg.eps);
        }
    }
}

double clip_grad_norm(ParamMap& grads, double max_norm) {
    double sq = 0.0;
    for (const auto& [name, g] : grads) {
        (void)name;
        for (std::size_t i = 0; i < g.size(); ++i) sq += g[i] * g[i];
    }
    const double norm = std::sqrt(sq);
    if (max_norm > 0.0 && norm > max_norm) {
        const double s = max_norm / norm;
        for (auto& [name, g] : grads) {
            (void)name;
            for (std::size_t i = 0; i < g.size(); ++i) g[i] *= s;
        }
    }
    return norm;
}

}  // namespace diffmts
