#include "diffmts/losses.hpp"

#include <algorithm>
#include <cmath>

namespace diffmts {

double noise_mse(const Array& eps, const Array& eps_hat) {
    require_same_shape(eps, eps_hat, "noise_mse");
    if (eps.empty()) throw ValidationError("noise_mse: empty arrays");
    double acc = 0.0;
    for (std::size_t i = 0; i < eps.size(); ++i) {
        const double d = eps[i] - eps_hat[i];
        acc += d * d;
    }
    return acc / static_cast<double>(eps.size());
}

namespace {

double sq_distance(const Array& a, const Array& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        acc += d * d;
    }
    return acc;
}

// exp coefficients -1 / (2 (scale*h)^2), one per mixture component
std::vector<double> kernel_coeffs(const KernelSpec& kernel, double bandwidth) {
    std::vector<double> coeffs;
    coeffs.reserve(kernel.bandwidth_scales.size());
    for (double s : kernel.bandwidth_scales) {
        const double sigma = s * bandwidth;
        coeffs.push_back(-1.0 / (2.0 * sigma * sigma));
    }
    return coeffs;
}

double kernel_mix(double d2, const std::vector<double>& coeffs) {
    double acc = 0.0;
    for (double c : coeffs) acc += std::exp(c * d2);
    return acc / static_cast<double>(coeffs.size());
}

void check_sets(const std::vector<Array>& n, const std::vector<Array>& m) {
    if (n.empty() || m.empty()) throw ValidationError("mmd: sample sets must be non-empty");
    const std::size_t dim = n.front().size();
    for (const Array& a : n) {
        if (a.size() != dim) throw ValidationError("mmd: samples must flatten to equal dimension");
    }
    for (const Array& a : m) {
        if (a.size() != dim) throw ValidationError("mmd: samples must flatten to equal dimension");
    }
}

}  // namespace

double median_pairwise_distance(const std::vector<const Array*>& joint) {
    std::vector<double> dists;
    dists.reserve(joint.size() * (joint.size() - 1) / 2);
    for (std::size_t i = 0; i < joint.size(); ++i) {
        for (std::size_t j = i + 1; j < joint.size(); ++j) {
            dists.push_back(std::sqrt(sq_distance(*joint[i], *joint[j])));
        }
    }
    if (dists.empty()) return 1.0;
    std::sort(dists.begin(), dists.end());
    const std::size_t p = dists.size();
    const double med = p % 2 == 1 ? dists[p / 2] : 0.5 * (dists[p / 2 - 1] + dists[p / 2]);
    return med > 0.0 ? med : 1.0;
}

double mmd(const std::vector<Array>& n, const std::vector<Array>& m, const KernelSpec& kernel) {
    kernel.validate();
    check_sets(n, m);
    double bandwidth;
    if (kernel.fixed_bandwidth) {
        bandwidth = *kernel.fixed_bandwidth;
    } else {
        std::vector<const Array*> joint;
        joint.reserve(n.size() + m.size());
        for (const Array& a : n) joint.push_back(&a);
        for (const Array& a : m) joint.push_back(&a);
        bandwidth = median_pairwise_distance(joint);
    }
    const std::vector<double> coeffs = kernel_coeffs(kernel, bandwidth);

    // identical loop structure for all three terms so mmd(X, X) cancels exactly
    auto term = [&coeffs](const std::vector<Array>& a, const std::vector<Array>& b) {
        double acc = 0.0;
        for (const Array& x : a)
            for (const Array& y : b) acc += kernel_mix(sq_distance(x, y), coeffs);
        return acc / (static_cast<double>(a.size()) * static_cast<double>(b.size()));
    };
    return term(n, n) - 2.0 * term(m, n) + term(m, m);
}

Value noise_mse_on_tape(Tape& tape, const std::vector<Value>& eps,
                        const std::vector<Value>& eps_hat) {
    if (eps.empty() || eps.size() != eps_hat.size()) {
        throw ValidationError("noise_mse: batch sizes differ or are empty");
    }
    Value acc;
    for (std::size_t i = 0; i < eps.size(); ++i) {
        Value diff = tape.sub(eps[i], eps_hat[i]);
        Value sq = tape.mean_all(tape.mul(diff, diff));
        acc = i == 0 ? sq : tape.add(acc, sq);
    }
    return tape.scale(acc, 1.0 / static_cast<double>(eps.size()));
}

Value mmd_on_tape(Tape& tape, const std::vector<Value>& n, const std::vector<Value>& m,
                  const KernelSpec& kernel) {
    kernel.validate();
    if (n.empty() || m.empty()) throw ValidationError("mmd: sample sets must be non-empty");
    std::vector<const Array*> joint;
    joint.reserve(n.size() + m.size());
    for (Value v : n) joint.push_back(&v.array());
    for (Value v : m) joint.push_back(&v.array());
    const std::size_t dim = joint.front()->size();
    for (const Array* a : joint) {
        if (a->size() != dim) {
            throw ValidationError("mmd: samples must flatten to equal dimension");
        }
    }
    const double bandwidth = kernel.fixed_bandwidth ? *kernel.fixed_bandwidth
                                                    : median_pairwise_distance(joint);
    const std::vector<double> coeffs = kernel_coeffs(kernel, bandwidth);
    const double nn = static_cast<double>(n.size()), mm = static_cast<double>(m.size());

    // k(n, n') involves no gradients; fold it into a constant.
    double term_nn = 0.0;
    for (Value a : n)
        for (Value b : n) term_nn += kernel_mix(sq_distance(a.array(), b.array()), coeffs);
    term_nn /= nn * nn;

    auto kernel_value = [&tape, &coeffs](Value a, Value b) {
        Value diff = tape.sub(a, b);
        Value d2 = tape.sum_all(tape.mul(diff, diff));
        Value acc;
        for (std::size_t s = 0; s < coeffs.size(); ++s) {
            Value e = tape.exp(tape.scale(d2, coeffs[s]));
            acc = s == 0 ? e : tape.add(acc, e);
        }
        return tape.scale(acc, 1.0 / static_cast<double>(coeffs.size()));
    };

    Value sum_mn;
    bool have_mn = false;
    for (Value a : m) {
        for (Value b : n) {
            Value k = kernel_value(a, b);
            sum_mn = have_mn ? tape.add(sum_mn, k) : k;
            have_mn = true;
        }
    }
    Value total = tape.add_scalar(tape.scale(sum_mn, -2.0 / (mm * nn)), term_nn);

    // diagonal of k(m, m) is exactly 1 per sample: a constant mm / mm^2
    total = tape.add_scalar(total, 1.0 / mm);
    Value sum_mm;
    bool have_mm = false;
    for (std::size_t i = 0; i < m.size(); ++i) {
        for (std::size_t j = i + 1; j < m.size(); ++j) {
            Value k = kernel_value(m[i], m[j]);
            sum_mm = have_mm ? tape.add(sum_mm, k) : k;
            have_mm = true;
        }
    }
    if (have_mm) total = tape.add(total, tape.scale(sum_mm, 2.0 / (mm * mm)));
    return total;
}

AdaMmdResult ada_mmd_loss(Tape& tape, const std::vector<Value>& eps,
                          const std::vector<Value>& eps_hat, Value omega_logit,
                          const AdaMmdOptions& options) {
    if (!omega_logit.array().all_finite()) {
        throw ValidationError("ada_mmd_loss: omega logit must be finite");
    }
    Value l_noise = noise_mse_on_tape(tape, eps, eps_hat);

    AdaMmdResult result;
    result.breakdown.l_noise = l_noise.array()[0];

    if (!options.mmd_enabled) {
        result.total = l_noise;
        result.breakdown.l_mmd = 0.0;
        result.breakdown.omega = 0.0;
        result.breakdown.l_total = result.breakdown.l_noise;
        return result;
    }

    Value l_mmd = mmd_on_tape(tape, eps, eps_hat, options.kernel);
    result.breakdown.l_mmd = l_mmd.array()[0];

    if (options.fixed_omega) {
        const double w = *options.fixed_omega;
        if (w < 0.0 || w > 1.0) throw ConfigError("ada_mmd_loss: fixed omega outside [0, 1]");
        result.total = tape.add(tape.scale(l_noise, 1.0 - w), tape.scale(l_mmd, w));
        result.breakdown.omega = w;
    } else {
        Value omega = tape.activation(omega_logit, ops::Act::Sigmoid);
        Value one_minus = tape.add_scalar(tape.scale(omega, -1.0), 1.0);
        result.total = tape.add(tape.mul(one_minus, l_noise), tape.mul(omega, l_mmd));
        result.breakdown.omega = omega.array()[0];
    }
    result.breakdown.l_total = result.total.array()[0];
    return result;
}

}  // namespace diffmts
