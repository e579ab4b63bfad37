#pragma once

#include <cstddef>

#include "diffmts/array.hpp"

namespace diffmts::ops {

// Convolution padding. "Same" zero-pads so that L' = ceil(L / stride);
// explicit padding adds the given number of zeros on each side.
struct Pad {
    enum class Mode { Same, Explicit };
    Mode mode = Mode::Same;
    std::size_t left = 0;
    std::size_t right = 0;

    static Pad same() { return Pad{}; }
    static Pad fixed(std::size_t both) { return Pad{Mode::Explicit, both, both}; }
    static Pad fixed(std::size_t l, std::size_t r) { return Pad{Mode::Explicit, l, r}; }
};

// Resolved (left, right) zero padding for a given input length / kernel / stride.
struct PadAmount {
    std::size_t left = 0;
    std::size_t right = 0;
};
PadAmount resolve_pad(const Pad& pad, std::size_t length, std::size_t kernel, std::size_t stride);

std::size_t conv_out_len(std::size_t length, std::size_t kernel, std::size_t stride,
                         const PadAmount& pad);

// Cross-correlation (kernels are not flipped).
// input (C_in, L), weight (C_out, C_in, k), bias (C_out) -> (C_out, L').
Array conv1d(const Array& input, const Array& weight, const Array& bias, std::size_t stride,
             const Pad& pad);

// Per-group normalization over (channels_in_group x L), then affine per channel.
Array group_norm(const Array& x, std::size_t groups, const Array& gamma, const Array& beta,
                 double eps);

enum class Act { SiLU, GeLU, ReLU, Sigmoid, Tanh, Softplus };

double apply_act(double x, Act kind);
double act_grad(double x, Act kind);
Array activation(const Array& x, Act kind);

enum class PoolKind { Avg, Max };

// Stride-1 pooling with replicate padding preserves the input length; the
// general formula is L' = (L + 2*(k-1)/2 - k)/stride + 1 on the padded signal.
Array pool1d(const Array& x, PoolKind kind, std::size_t kernel, std::size_t stride);

Array softmax(const Array& x, std::size_t axis);

Array matmul(const Array& a, const Array& b);
Array transpose(const Array& a);

Array add(const Array& a, const Array& b);
Array sub(const Array& a, const Array& b);
Array mul(const Array& a, const Array& b);
Array scale(const Array& a, double s);
Array add_scalar(const Array& a, double s);

// (C_a, L) ++ (C_b, L) -> (C_a + C_b, L); rank-1 inputs concatenate directly.
Array concat_axis0(const Array& a, const Array& b);
Array slice_axis0(const Array& a, std::size_t from, std::size_t to);

// Repeats each time index `factor` times along the last axis.
Array upsample_nearest(const Array& x, std::size_t factor);

double sum_all(const Array& a);
double mean_all(const Array& a);

}  // namespace diffmts::ops
