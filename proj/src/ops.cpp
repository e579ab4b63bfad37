#include "diffmts/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace diffmts::ops {

namespace {

void require_rank(const Array& a, std::size_t rank, const char* what) {
    if (a.rank() != rank) {
        throw ShapeError(std::string(what) + ": expected rank " + std::to_string(rank) +
                         ", got shape " + shape_str(a.shape()));
    }
}

}  // namespace

PadAmount resolve_pad(const Pad& pad, std::size_t length, std::size_t kernel,
                      std::size_t stride) {
    if (pad.mode == Pad::Mode::Explicit) return {pad.left, pad.right};
    // "same": L' = ceil(L / stride), total = max(0, (L'-1)*stride + k - L),
    // split with the extra zero on the right.
    std::size_t out = (length + stride - 1) / stride;
    std::size_t needed = (out - 1) * stride + kernel;
    std::size_t total = needed > length ? needed - length : 0;
    return {total / 2, total - total / 2};
}

std::size_t conv_out_len(std::size_t length, std::size_t kernel, std::size_t stride,
                         const PadAmount& pad) {
    std::size_t padded = length + pad.left + pad.right;
    if (padded < kernel) {
        throw ShapeError("conv1d: padded length " + std::to_string(padded) +
                         " shorter than kernel " + std::to_string(kernel));
    }
    return (padded - kernel) / stride + 1;
}

Array conv1d(const Array& input, const Array& weight, const Array& bias, std::size_t stride,
             const Pad& pad) {
    require_rank(input, 2, "conv1d input");
    require_rank(weight, 3, "conv1d weight");
    require_rank(bias, 1, "conv1d bias");
    const std::size_t c_in = input.dim(0), length = input.dim(1);
    const std::size_t c_out = weight.dim(0), kernel = weight.dim(2);
    if (weight.dim(1) != c_in) {
        throw ShapeError("conv1d: input has " + std::to_string(c_in) + " channels, weight expects " +
                         std::to_string(weight.dim(1)));
    }
    if (bias.dim(0) != c_out) {
        throw ShapeError("conv1d: bias size " + std::to_string(bias.dim(0)) +
                         " does not match " + std::to_string(c_out) + " filters");
    }
    if (kernel < 1 || stride < 1) throw ConfigError("conv1d: kernel and stride must be >= 1");

    const PadAmount p = resolve_pad(pad, length, kernel, stride);
    const std::size_t out_len = conv_out_len(length, kernel, stride, p);
    Array out({c_out, out_len});
    for (std::size_t oc = 0; oc < c_out; ++oc) {
        for (std::size_t ol = 0; ol < out_len; ++ol) {
            double acc = bias[oc];
            const std::ptrdiff_t base = static_cast<std::ptrdiff_t>(ol * stride) -
                                        static_cast<std::ptrdiff_t>(p.left);
            for (std::size_t ic = 0; ic < c_in; ++ic) {
                for (std::size_t j = 0; j < kernel; ++j) {
                    const std::ptrdiff_t il = base + static_cast<std::ptrdiff_t>(j);
                    if (il < 0 || il >= static_cast<std::ptrdiff_t>(length)) continue;
                    acc += input.at(ic, static_cast<std::size_t>(il)) * weight.at(oc, ic, j);
                }
            }
            out.at(oc, ol) = acc;
        }
    }
    return out;
}

Array group_norm(const Array& x, std::size_t groups, const Array& gamma, const Array& beta,
                 double eps) {
    require_rank(x, 2, "group_norm input");
    const std::size_t channels = x.dim(0), length = x.dim(1);
    if (groups == 0 || channels % groups != 0) {
        throw ConfigError("group_norm: " + std::to_string(channels) +
                          " channels not divisible by " + std::to_string(groups) + " groups");
    }
    if (gamma.size() != channels || beta.size() != channels) {
        throw ShapeError("group_norm: affine parameters must have one entry per channel");
    }
    if (eps <= 0.0) throw ConfigError("group_norm: eps must be positive");

    const std::size_t per_group = channels / groups;
    Array out(x.shape());
    for (std::size_t g = 0; g < groups; ++g) {
        const std::size_t c0 = g * per_group;
        const std::size_t count = per_group * length;
        double mean = 0.0;
        for (std::size_t c = c0; c < c0 + per_group; ++c)
            for (std::size_t l = 0; l < length; ++l) mean += x.at(c, l);
        mean /= static_cast<double>(count);
        double var = 0.0;
        for (std::size_t c = c0; c < c0 + per_group; ++c)
            for (std::size_t l = 0; l < length; ++l) {
                const double d = x.at(c, l) - mean;
                var += d * d;
            }
        var /= static_cast<double>(count);
        const double inv_std = 1.0 / std::sqrt(var + eps);
        for (std::size_t c = c0; c < c0 + per_group; ++c)
            for (std::size_t l = 0; l < length; ++l)
                out.at(c, l) = (x.at(c, l) - mean) * inv_std * gamma[c] + beta[c];
    }
    return out;
}

double apply_act(double x, Act kind) {
    switch (kind) {
        case Act::SiLU:
            return x / (1.0 + std::exp(-x));
        case Act::GeLU:
            // exact Gaussian-CDF form: x * Phi(x)
            return 0.5 * x * (1.0 + std::erf(x * 0.7071067811865475244));
        case Act::ReLU:
            return x > 0.0 ? x : 0.0;
        case Act::Sigmoid:
            return 1.0 / (1.0 + std::exp(-x));
        case Act::Tanh:
            return std::tanh(x);
        case Act::Softplus:
            // log(1 + e^x), stable for large |x|
            return x > 30.0 ? x : std::log1p(std::exp(x));
    }
    throw ConfigError("activation: unsupported kind");
}

double act_grad(double x, Act kind) {
    switch (kind) {
        case Act::SiLU: {
            const double s = 1.0 / (1.0 + std::exp(-x));
            return s * (1.0 + x * (1.0 - s));
        }
        case Act::GeLU: {
            const double phi = 0.5 * (1.0 + std::erf(x * 0.7071067811865475244));
            const double pdf = std::exp(-0.5 * x * x) * 0.3989422804014326779;
            return phi + x * pdf;
        }
        case Act::ReLU:
            return x > 0.0 ? 1.0 : 0.0;
        case Act::Sigmoid: {
            const double s = 1.0 / (1.0 + std::exp(-x));
            return s * (1.0 - s);
        }
        case Act::Tanh: {
            const double t = std::tanh(x);
            return 1.0 - t * t;
        }
        case Act::Softplus:
            return 1.0 / (1.0 + std::exp(-x));
    }
    throw ConfigError("activation: unsupported kind");
}

Array activation(const Array& x, Act kind) {
    Array out(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = apply_act(x[i], kind);
    return out;
}

Array pool1d(const Array& x, PoolKind kind, std::size_t kernel, std::size_t stride) {
    require_rank(x, 2, "pool1d input");
    const std::size_t channels = x.dim(0), length = x.dim(1);
    if (kernel % 2 == 0) throw ConfigError("pool1d: kernel must be odd");
    if (stride < 1) throw ConfigError("pool1d: stride must be >= 1");
    if (kernel > 2 * length) {
        throw ValidationError("pool1d: kernel " + std::to_string(kernel) +
                              " exceeds twice the input length " + std::to_string(length));
    }
    const std::size_t p = (kernel - 1) / 2;
    const std::size_t out_len = (length + 2 * p - kernel) / stride + 1;
    Array out({channels, out_len});
    for (std::size_t c = 0; c < channels; ++c) {
        for (std::size_t o = 0; o < out_len; ++o) {
            const std::ptrdiff_t base =
                static_cast<std::ptrdiff_t>(o * stride) - static_cast<std::ptrdiff_t>(p);
            double acc = kind == PoolKind::Avg ? 0.0 : -std::numeric_limits<double>::infinity();
            for (std::size_t j = 0; j < kernel; ++j) {
                std::ptrdiff_t il = base + static_cast<std::ptrdiff_t>(j);
                il = std::clamp<std::ptrdiff_t>(il, 0, static_cast<std::ptrdiff_t>(length) - 1);
                const double v = x.at(c, static_cast<std::size_t>(il));
                if (kind == PoolKind::Avg) {
                    acc += v;
                } else if (v > acc) {
                    acc = v;
                }
            }
            out.at(c, o) = kind == PoolKind::Avg ? acc / static_cast<double>(kernel) : acc;
        }
    }
    return out;
}

Array softmax(const Array& x, std::size_t axis) {
    if (axis >= x.rank()) throw ConfigError("softmax: axis out of range");
    std::size_t inner = 1, outer = 1;
    const std::size_t n = x.dim(axis);
    for (std::size_t i = 0; i < axis; ++i) outer *= x.dim(i);
    for (std::size_t i = axis + 1; i < x.rank(); ++i) inner *= x.dim(i);

    Array out(x.shape());
    for (std::size_t o = 0; o < outer; ++o) {
        for (std::size_t in = 0; in < inner; ++in) {
            const std::size_t base = o * n * inner + in;
            double mx = -std::numeric_limits<double>::infinity();
            for (std::size_t k = 0; k < n; ++k) mx = std::max(mx, x[base + k * inner]);
            double sum = 0.0;
            for (std::size_t k = 0; k < n; ++k) {
                const double e = std::exp(x[base + k * inner] - mx);
                out[base + k * inner] = e;
                sum += e;
            }
            for (std::size_t k = 0; k < n; ++k) out[base + k * inner] /= sum;
        }
    }
    return out;
}

Array matmul(const Array& a, const Array& b) {
    require_rank(a, 2, "matmul lhs");
    require_rank(b, 2, "matmul rhs");
    if (a.dim(1) != b.dim(0)) {
        throw ShapeError("matmul: " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
    }
    const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
    Array out({m, n});
    for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t p = 0; p < k; ++p) {
            const double av = a.at(i, p);
            if (av == 0.0) continue;
            for (std::size_t j = 0; j < n; ++j) out.at(i, j) += av * b.at(p, j);
        }
    }
    return out;
}

Array transpose(const Array& a) {
    require_rank(a, 2, "transpose");
    Array out({a.dim(1), a.dim(0)});
    for (std::size_t i = 0; i < a.dim(0); ++i)
        for (std::size_t j = 0; j < a.dim(1); ++j) out.at(j, i) = a.at(i, j);
    return out;
}

Array add(const Array& a, const Array& b) {
    require_same_shape(a, b, "add");
    Array out(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
    return out;
}

Array sub(const Array& a, const Array& b) {
    require_same_shape(a, b, "sub");
    Array out(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
    return out;
}

Array mul(const Array& a, const Array& b) {
    require_same_shape(a, b, "mul");
    Array out(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * b[i];
    return out;
}

Array scale(const Array& a, double s) {
    Array out(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] * s;
    return out;
}

Array add_scalar(const Array& a, double s) {
    Array out(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + s;
    return out;
}

Array concat_axis0(const Array& a, const Array& b) {
    if (a.rank() != b.rank() || a.rank() < 1) {
        throw ShapeError("concat: rank mismatch " + shape_str(a.shape()) + " vs " +
                         shape_str(b.shape()));
    }
    for (std::size_t i = 1; i < a.rank(); ++i) {
        if (a.dim(i) != b.dim(i)) {
            throw ShapeError("concat: trailing dims differ " + shape_str(a.shape()) + " vs " +
                             shape_str(b.shape()));
        }
    }
    Shape shape = a.shape();
    shape[0] += b.dim(0);
    Array out(shape);
    std::copy(a.data(), a.data() + a.size(), out.data());
    std::copy(b.data(), b.data() + b.size(), out.data() + a.size());
    return out;
}

Array slice_axis0(const Array& a, std::size_t from, std::size_t to) {
    if (a.rank() < 1 || from >= to || to > a.dim(0)) {
        throw ShapeError("slice: range [" + std::to_string(from) + ", " + std::to_string(to) +
                         ") invalid for shape " + shape_str(a.shape()));
    }
    Shape shape = a.shape();
    shape[0] = to - from;
    const std::size_t row = a.size() / a.dim(0);
    Array out(shape);
    std::copy(a.data() + from * row, a.data() + to * row, out.data());
    return out;
}

Array upsample_nearest(const Array& x, std::size_t factor) {
    if (factor < 1) throw ConfigError("upsample: factor must be >= 1");
    if (x.rank() == 1) {
        Array out({x.dim(0) * factor});
        for (std::size_t i = 0; i < x.dim(0); ++i)
            for (std::size_t f = 0; f < factor; ++f) out[i * factor + f] = x[i];
        return out;
    }
    require_rank(x, 2, "upsample input");
    Array out({x.dim(0), x.dim(1) * factor});
    for (std::size_t c = 0; c < x.dim(0); ++c)
        for (std::size_t l = 0; l < x.dim(1); ++l)
            for (std::size_t f = 0; f < factor; ++f) out.at(c, l * factor + f) = x.at(c, l);
    return out;
}

double sum_all(const Array& a) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i];
    return s;
}

double mean_all(const Array& a) {
    if (a.empty()) throw ValidationError("mean of empty array");
    return sum_all(a) / static_cast<double>(a.size());
}

}  // namespace diffmts::ops
