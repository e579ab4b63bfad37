#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "diffmts/adam.hpp"
#include "diffmts/rng.hpp"
#include "diffmts/tape.hpp"

namespace testutil {

using diffmts::Array;
using diffmts::ParamMap;
using diffmts::Rng;
using diffmts::Shape;

inline Array random_array(Rng& rng, Shape shape, double lo = -1.0, double hi = 1.0) {
    Array a(std::move(shape));
    for (std::size_t i = 0; i < a.size(); ++i) a[i] = rng.uniform(lo, hi);
    return a;
}

inline Array random_normal(Rng& rng, Shape shape) {
    Array a(std::move(shape));
    for (std::size_t i = 0; i < a.size(); ++i) a[i] = rng.normal();
    return a;
}

inline double max_abs_diff(const Array& a, const Array& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

// Central finite differences against tape gradients for a scalar-valued
// function of named inputs. `build` must run the whole forward pass on the
// given tape from the supplied leaf values and return the scalar loss.
struct GradCheck {
    double h = 1e-5;
    double tolerance = 1e-4;

    // returns the worst relative error over all coordinates of all inputs
    double run(ParamMap inputs,
               const std::function<diffmts::Value(diffmts::Tape&, const diffmts::TapeParams&)>&
                   build) const {
        diffmts::Tape tape;
        diffmts::TapeParams leaves = diffmts::bind_params(tape, inputs, true);
        diffmts::Value loss = build(tape, leaves);
        tape.backward(loss);

        auto eval = [&](const ParamMap& at) {
            diffmts::Tape t(false);
            diffmts::TapeParams l = diffmts::bind_params(t, at, false);
            return build(t, l).array()[0];
        };

        double worst = 0.0;
        for (auto& [name, base] : inputs) {
            const Array analytic = tape.grad(leaves.at(name));
            for (std::size_t i = 0; i < base.size(); ++i) {
                ParamMap shifted = inputs;
                shifted.at(name)[i] = base[i] + h;
                const double up = eval(shifted);
                shifted.at(name)[i] = base[i] - h;
                const double down = eval(shifted);
                const double fd = (up - down) / (2.0 * h);
                const double denom = std::max({1.0, std::abs(fd), std::abs(analytic[i])});
                worst = std::max(worst, std::abs(fd - analytic[i]) / denom);
            }
        }
        return worst;
    }
};

}  // namespace testutil
