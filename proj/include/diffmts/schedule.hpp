#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "diffmts/array.hpp"

namespace diffmts {

enum class ScheduleKind { Linear, Cosine };

ScheduleKind schedule_kind_from_string(const std::string& s);
std::string to_string(ScheduleKind kind);

// Precomputed noise schedule. Indexing follows the math: beta/alpha/
// posterior_var are valid for t in [1, T], alpha_bar for t in [0, T] with
// alpha_bar[0] = 1. Immutable after construction.
class ScheduleTable {
public:
    // linear: beta_t = 1/(T - t + 1); cosine: alpha_bar_t = f(t)/f(0) with
    // f(t) = cos^2(((t/T + s)/(1 + s)) * pi/2). Betas are clipped to <= 0.999
    // in both cases (the linear rule reaches 1 at t = T, which would make the
    // reverse-step coefficient 1/sqrt(alpha_t) singular).
    static ScheduleTable make(ScheduleKind kind, std::size_t total_steps, double s = 0.008);

    ScheduleKind kind() const { return kind_; }
    std::size_t total_steps() const { return total_steps_; }
    double offset() const { return s_; }

    double beta(std::size_t t) const { return beta_[check_t(t) - 1]; }
    double alpha(std::size_t t) const { return 1.0 - beta(t); }
    double alpha_bar(std::size_t t) const;  // t in [0, T]
    double posterior_var(std::size_t t) const { return posterior_var_[check_t(t) - 1]; }

private:
    std::size_t check_t(std::size_t t) const;
    ScheduleKind kind_ = ScheduleKind::Cosine;
    std::size_t total_steps_ = 0;
    double s_ = 0.008;
    std::vector<double> beta_;           // [t-1] for t in 1..T
    std::vector<double> alpha_bar_;      // [t] for t in 0..T
    std::vector<double> posterior_var_;  // [t-1] for t in 1..T
};

// Forward diffusion sample: sqrt(abar_t) * x0 + sqrt(1 - abar_t) * eps.
// t = 0 is accepted as the no-noise convention and returns x0.
Array q_sample(const Array& x0, std::size_t t, const Array& eps, const ScheduleTable& table);

struct PosteriorCoeffs {
    double coef_xt;   // 1/sqrt(alpha_t)
    double coef_eps;  // beta_t / sqrt(1 - abar_t)
    double variance;  // ((1 - abar_{t-1}) / (1 - abar_t)) * beta_t
};

PosteriorCoeffs posterior_coeffs(const ScheduleTable& table, std::size_t t);

}  // namespace diffmts
