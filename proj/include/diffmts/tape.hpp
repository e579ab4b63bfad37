#pragma once

#include <functional>
#include <initializer_list>
#include <map>
#include <string>
#include <vector>

#include "diffmts/array.hpp"
#include "diffmts/ops.hpp"

namespace diffmts {

class Tape;

// Handle to a node on a recording tape. Valid only while its tape is alive.
class Value {
public:
    Value() = default;
    const Array& array() const;
    const Shape& shape() const { return array().shape(); }
    bool valid() const { return tape_ != nullptr; }

private:
    friend class Tape;
    Value(Tape* tape, std::size_t idx) : tape_(tape), idx_(idx) {}
    Tape* tape_ = nullptr;
    std::size_t idx_ = 0;
};

// Reverse-mode tape. Forward calls record one node per op; backward walks the
// nodes in reverse creation order (creation order is already topological),
// visiting each node once. A tape is confined to one thread.
class Tape {
public:
    Tape() = default;
    explicit Tape(bool recording) : recording_(recording) {}
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    bool recording() const { return recording_; }

    Value leaf(Array value, bool requires_grad = false);
    Value constant(Array value) { return leaf(std::move(value), false); }
    Value constant(double v) { return leaf(Array::scalar(v), false); }

    Value add(Value a, Value b);
    Value sub(Value a, Value b);
    Value mul(Value a, Value b);
    Value scale(Value a, double s);
    Value add_scalar(Value a, double s);
    Value exp(Value a);
    Value activation(Value a, ops::Act kind);
    Value matmul(Value a, Value b);
    Value transpose(Value a);
    Value conv1d(Value input, Value weight, Value bias, std::size_t stride, const ops::Pad& pad);
    Value group_norm(Value x, std::size_t groups, Value gamma, Value beta, double eps);
    Value pool1d(Value x, ops::PoolKind kind, std::size_t kernel, std::size_t stride);
    Value softmax(Value x, std::size_t axis);
    Value concat_axis0(Value a, Value b);
    Value slice_axis0(Value a, std::size_t from, std::size_t to);
    Value upsample_nearest(Value x, std::size_t factor);
    Value reshape(Value a, Shape shape);
    // x (C, L) plus a per-channel bias vector (C), broadcast along L.
    Value add_channel_bias(Value x, Value bias);
    // W (out, in) * x (in) + b (out)
    Value linear(Value weight, Value x, Value bias);
    Value sum_all(Value a);
    Value mean_all(Value a);

    // Seeds d(loss)/d(loss) = 1 and accumulates gradients into every
    // requires-grad node reachable from `loss`. The loss must be scalar.
    void backward(Value loss);

    const Array& value(Value v) const;
    // Gradient of the last backward() w.r.t. this node; zeros if untouched.
    Array grad(Value v) const;

    std::size_t node_count() const { return nodes_.size(); }

private:
    using BackwardFn = std::function<void(Tape&, const Array& gout)>;

    struct Node {
        Array value;
        Array grad;                  // allocated lazily during backward
        bool requires_grad = false;  // any path to a grad leaf
        BackwardFn backward;
    };

    void check(Value v, const char* what) const;
    Value push(Array value, bool requires_grad, BackwardFn backward);
    Array& grad_buf(std::size_t idx);
    void accumulate(std::size_t idx, const Array& g);
    bool wants_grad(std::initializer_list<Value> inputs) const;

    std::vector<Node> nodes_;
    bool recording_ = true;
};

using TapeParams = std::map<std::string, Value>;

// Leaves every array onto the tape under its name.
TapeParams bind_params(Tape& tape, const ParamMap& params, bool requires_grad);

}  // namespace diffmts
