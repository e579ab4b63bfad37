#include "diffmts/schedule.hpp"

#include <cmath>

namespace diffmts {

namespace {
constexpr double kPi = 3.141592653589793238462643383279503;
constexpr double kBetaMax = 0.999;

double cosine_f(double t, double total, double s) {
    const double x = ((t / total + s) / (1.0 + s)) * (kPi / 2.0);
    const double c = std::cos(x);
    return c * c;
}
}  // namespace

ScheduleKind schedule_kind_from_string(const std::string& s) {
    if (s == "linear") return ScheduleKind::Linear;
    if (s == "cosine") return ScheduleKind::Cosine;
    throw ConfigError("unknown schedule kind '" + s + "' (expected linear or cosine)");
}

std::string to_string(ScheduleKind kind) {
    return kind == ScheduleKind::Linear ? "linear" : "cosine";
}

ScheduleTable ScheduleTable::make(ScheduleKind kind, std::size_t total_steps, double s) {
    if (total_steps < 1) throw ConfigError("schedule: T must be >= 1");
    if (kind == ScheduleKind::Cosine && s <= 0.0) {
        throw ConfigError("schedule: cosine offset s must be > 0");
    }
    ScheduleTable table;
    table.kind_ = kind;
    table.total_steps_ = total_steps;
    table.s_ = s;
    table.beta_.resize(total_steps);
    table.alpha_bar_.resize(total_steps + 1);
    table.posterior_var_.resize(total_steps);
    table.alpha_bar_[0] = 1.0;

    const double total = static_cast<double>(total_steps);
    if (kind == ScheduleKind::Linear) {
        for (std::size_t t = 1; t <= total_steps; ++t) {
            table.beta_[t - 1] = std::min(1.0 / (total - static_cast<double>(t) + 1.0), kBetaMax);
        }
    } else {
        // f(0) cancels in f(t)/f(t-1); alpha_bar accumulates to f(t)/f(0)
        // wherever the clip is inactive.
        for (std::size_t t = 1; t <= total_steps; ++t) {
            const double ratio = cosine_f(static_cast<double>(t), total, s) /
                                 cosine_f(static_cast<double>(t) - 1.0, total, s);
            table.beta_[t - 1] = std::min(1.0 - ratio, kBetaMax);
        }
    }
    for (std::size_t t = 1; t <= total_steps; ++t) {
        table.alpha_bar_[t] = table.alpha_bar_[t - 1] * (1.0 - table.beta_[t - 1]);
        table.posterior_var_[t - 1] = (1.0 - table.alpha_bar_[t - 1]) /
                                      (1.0 - table.alpha_bar_[t]) * table.beta_[t - 1];
    }
    return table;
}

std::size_t ScheduleTable::check_t(std::size_t t) const {
    if (t < 1 || t > total_steps_) {
        throw IndexError("schedule: timestep " + std::to_string(t) + " outside [1, " +
                         std::to_string(total_steps_) + "]");
    }
    return t;
}

double ScheduleTable::alpha_bar(std::size_t t) const {
    if (t > total_steps_) {
        throw IndexError("schedule: alpha_bar index " + std::to_string(t) + " outside [0, " +
                         std::to_string(total_steps_) + "]");
    }
    return alpha_bar_[t];
}

Array q_sample(const Array& x0, std::size_t t, const Array& eps, const ScheduleTable& table) {
    require_same_shape(x0, eps, "q_sample");
    if (t > table.total_steps()) {
        throw IndexError("q_sample: timestep " + std::to_string(t) + " outside [0, " +
                         std::to_string(table.total_steps()) + "]");
    }
    const double abar = table.alpha_bar(t);
    const double signal = std::sqrt(abar);
    const double noise = std::sqrt(1.0 - abar);
    Array out(x0.shape());
    for (std::size_t i = 0; i < x0.size(); ++i) out[i] = signal * x0[i] + noise * eps[i];
    return out;
}

PosteriorCoeffs posterior_coeffs(const ScheduleTable& table, std::size_t t) {
    PosteriorCoeffs c{};
    c.coef_xt = 1.0 / std::sqrt(table.alpha(t));
    c.coef_eps = table.beta(t) / std::sqrt(1.0 - table.alpha_bar(t));
    c.variance = table.posterior_var(t);
    return c;
}

}  // namespace diffmts
