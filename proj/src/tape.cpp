#include "diffmts/tape.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

namespace diffmts {

const Array& Value::array() const {
    if (!tape_) throw GraphError("value does not belong to a tape");
    return tape_->value(*this);
}

void Tape::check(Value v, const char* what) const {
    if (v.tape_ != this || v.idx_ >= nodes_.size()) {
        throw GraphError(std::string(what) + ": value was not recorded on this tape");
    }
}

Value Tape::push(Array value, bool requires_grad, BackwardFn backward) {
    Node node;
    node.value = std::move(value);
    node.requires_grad = requires_grad;
    node.backward = std::move(backward);
    nodes_.push_back(std::move(node));
    return Value(this, nodes_.size() - 1);
}

const Array& Tape::value(Value v) const {
    check(v, "value");
    return nodes_[v.idx_].value;
}

Array Tape::grad(Value v) const {
    check(v, "grad");
    const Node& node = nodes_[v.idx_];
    if (node.grad.empty()) return Array(node.value.shape());
    return node.grad;
}

Array& Tape::grad_buf(std::size_t idx) {
    Node& node = nodes_[idx];
    if (node.grad.empty()) node.grad = Array(node.value.shape());
    return node.grad;
}

void Tape::accumulate(std::size_t idx, const Array& g) {
    Node& node = nodes_[idx];
    if (!node.requires_grad) return;
    Array& buf = grad_buf(idx);
    for (std::size_t i = 0; i < g.size(); ++i) buf[i] += g[i];
}

Value Tape::leaf(Array value, bool requires_grad) {
    return push(std::move(value), requires_grad && recording_, nullptr);
}

bool Tape::wants_grad(std::initializer_list<Value> inputs) const {
    if (!recording_) return false;
    for (Value v : inputs) {
        if (nodes_[v.idx_].requires_grad) return true;
    }
    return false;
}

Value Tape::add(Value a, Value b) {
    check(a, "add");
    check(b, "add");
    Array out = ops::add(nodes_[a.idx_].value, nodes_[b.idx_].value);
    if (!wants_grad({a, b})) return push(std::move(out), false, nullptr);
    const std::size_t ia = a.idx_, ib = b.idx_;
    return push(std::move(out), true, [ia, ib](Tape& t, const Array& g) {
        t.accumulate(ia, g);
        t.accumulate(ib, g);
    });
}

Value Tape::sub(Value a, Value b) {
    check(a, "sub");
    check(b, "sub");
    Array out = ops::sub(nodes_[a.idx_].value, nodes_[b.idx_].value);
    if (!wants_grad({a, b})) return push(std::move(out), false, nullptr);
    const std::size_t ia = a.idx_, ib = b.idx_;
    return push(std::move(out), true, [ia, ib](Tape& t, const Array& g) {
        t.accumulate(ia, g);
        if (t.nodes_[ib].requires_grad) {
            Array& buf = t.grad_buf(ib);
            for (std::size_t i = 0; i < g.size(); ++i) buf[i] -= g[i];
        }
    });
}

Value Tape::mul(Value a, Value b) {
    check(a, "mul");
    check(b, "mul");
    Array out = ops::mul(nodes_[a.idx_].value, nodes_[b.idx_].value);
    if (!wants_grad({a, b})) return push(std::move(out), false, nullptr);
    const std::size_t ia = a.idx_, ib = b.idx_;
    return push(std::move(out), true, [ia, ib](Tape& t, const Array& g) {
        const Array& av = t.nodes_[ia].value;
        const Array& bv = t.nodes_[ib].value;
        if (t.nodes_[ia].requires_grad) {
            Array& buf = t.grad_buf(ia);
            for (std::size_t i = 0; i < g.size(); ++i) buf[i] += g[i] * bv[i];
        }
        if (t.nodes_[ib].requires_grad) {
            Array& buf = t.grad_buf(ib);
            for (std::size_t i = 0; i < g.size(); ++i) buf[i] += g[i] * av[i];
        }
    });
}

Value Tape::scale(Value a, double s) {
    check(a, "scale");
    Array out = ops::scale(nodes_[a.idx_].value, s);
    if (!wants_grad({a})) return push(std::move(out), false, nullptr);
    const std::size_t ia = a.idx_;
    return push(std::move(out), true, [ia, s](Tape& t, const Array& g) {
        Array& buf = t.grad_buf(ia);
        for (std::size_t i = 0; i < g.size(); ++i) buf[i] += g[i] * s;
    });
}

Value Tape::add_scalar(Value a, double s) {
    check(a, "add_scalar");
    Array out = ops::add_scalar(nodes_[a.idx_].value, s);
    if (!wants_grad({a})) return push(std::move(out), false, nullptr);
    const std::size_t ia = a.idx_;
    return push(std::move(out), true,
                [ia](Tape& t, const Array& g) { t.accumulate(ia, g); });
}

Value Tape::exp(Value a) {
    check(a, "exp");
    const Array& av = nodes_[a.idx_].value;
    Array out(av.shape());
    for (std::size_t i = 0; i < av.size(); ++i) out[i] = std::exp(av[i]);
    if (!wants_grad({a})) return push(std::move(out), false, nullptr);
    const std::size_t ia = a.idx_;
    Value v = push(std::move(out), true, nullptr);
    const std::size_t io = v.idx_;
    nodes_[io].backward = [ia, io](Tape& t, const Array& g) {
        const Array& y = t.nodes_[io].value;
        Array& buf = t.grad_buf(ia);
        for (std::size_t i = 0; i < g.size(); ++i) buf[i] += g[i] * y[i];
    };
    return v;
}

Value Tape::activation(Value a, ops::Act kind) {
    check(a, "activation");
    Array out = ops::activation(nodes_[a.idx_].value, kind);
    if (!wants_grad({a})) return push(std::move(out), false, nullptr);
    const std::size_t ia = a.idx_;
    return push(std::move(out), true, [ia, kind](Tape& t, const Array& g) {
        const Array& x = t.nodes_[ia].value;
        Array& buf = t.grad_buf(ia);
        for (std::size_t i = 0; i < g.size(); ++i) buf[i] += g[i] * ops::act_grad(x[i], kind);
    });
}

Value Tape::matmul(Value a, Value b) {
    check(a, "matmul");
    check(b, "matmul");
    Array out = ops::matmul(nodes_[a.idx_].value, nodes_[b.idx_].value);
    if (!wants_grad({a, b})) return push(std::move(out), false, nullptr);
    const std::size_t ia = a.idx_, ib = b.idx_;
    return push(std::move(out), true, [ia, ib](Tape& t, const Array& g) {
        const Array& av = t.nodes_[ia].value;
        const Array& bv = t.nodes_[ib].value;
        const std::size_t m = av.dim(0), k = av.dim(1), n = bv.dim(1);
        if (t.nodes_[ia].requires_grad) {
            Array& da = t.grad_buf(ia);  // dA = G * B^T
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t j = 0; j < n; ++j) {
                    const double gv = g.at(i, j);
                    if (gv == 0.0) continue;
                    for (std::size_t p = 0; p < k; ++p) da.at(i, p) += gv * bv.at(p, j);
                }
        }
        if (t.nodes_[ib].requires_grad) {
            Array& db = t.grad_buf(ib);  // dB = A^T * G
            for (std::size_t i = 0; i < m; ++i)
                for (std::size_t p = 0; p < k; ++p) {
                    const double av_ip = av.at(i, p);
                    if (av_ip == 0.0) continue;
                    for (std::size_t j = 0; j < n; ++j) db.at(p, j) += av_ip * g.at(i, j);
                }
        }
    });
}

Value Tape::transpose(Value a) {
    check(a, "transpose");
    Array out = ops::transpose(nodes_[a.idx_].value);
    if (!wants_grad({a})) return push(std::move(out), false, nullptr);
    const std::size_t ia = a.idx_;
    return push(std::move(out), true, [ia](Tape& t, const Array& g) {
        Array& buf = t.grad_buf(ia);
        for (std::size_t i = 0; i < g.dim(0); ++i)
            for (std::size_t j = 0; j < g.dim(1); ++j) buf.at(j, i) += g.at(i, j);
    });
}

Value Tape::conv1d(Value input, Value weight, Value bias, std::size_t stride,
                   const ops::Pad& pad) {
    check(input, "conv1d");
    check(weight, "conv1d");
    check(bias, "conv1d");
    const Array& in = nodes_[input.idx_].value;
    const Array& w = nodes_[weight.idx_].value;
    Array out = ops::conv1d(in, w, nodes_[bias.idx_].value, stride, pad);
    if (!wants_grad({input, weight, bias})) return push(std::move(out), false, nullptr);
    const ops::PadAmount p = ops::resolve_pad(pad, in.dim(1), w.dim(2), stride);
    const std::size_t ii = input.idx_, iw = weight.idx_, ib = bias.idx_;
    return push(std::move(out), true, [ii, iw, ib, stride, p](Tape& t, const Array& g) {
        const Array& in = t.nodes_[ii].value;
        const Array& w = t.nodes_[iw].value;
        const std::size_t c_in = in.dim(0), length = in.dim(1);
        const std::size_t c_out = w.dim(0), kernel = w.dim(2);
        const std::size_t out_len = g.dim(1);
        const bool need_in = t.nodes_[ii].requires_grad;
        const bool need_w = t.nodes_[iw].requires_grad;
        const bool need_b = t.nodes_[ib].requires_grad;
        Array* din = need_in ? &t.grad_buf(ii) : nullptr;
        Array* dw = need_w ? &t.grad_buf(iw) : nullptr;
        Array* db = need_b ? &t.grad_buf(ib) : nullptr;
        for (std::size_t oc = 0; oc < c_out; ++oc) {
            for (std::size_t ol = 0; ol < out_len; ++ol) {
                const double gv = g.at(oc, ol);
                if (gv == 0.0) continue;
                if (db) (*db)[oc] += gv;
                if (!need_in && !need_w) continue;
                const std::ptrdiff_t base = static_cast<std::ptrdiff_t>(ol * stride) -
                                            static_cast<std::ptrdiff_t>(p.left);
                for (std::size_t ic = 0; ic < c_in; ++ic) {
                    for (std::size_t j = 0; j < kernel; ++j) {
                        const std::ptrdiff_t il = base + static_cast<std::ptrdiff_t>(j);
                        if (il < 0 || il >= static_cast<std::ptrdiff_t>(length)) continue;
                        const std::size_t iu = static_cast<std::size_t>(il);
                        if (din) din->at(ic, iu) += gv * w.at(oc, ic, j);
                        if (dw) dw->at(oc, ic, j) += gv * in.at(ic, iu);
                    }
                }
            }
        }
    });
}

Value Tape::group_norm(Value x, std::size_t groups, Value gamma, Value beta, double eps) {
    check(x, "group_norm");
    check(gamma, "group_norm");
    check(beta, "group_norm");
    const Array& xv = nodes_[x.idx_].value;
    Array out = ops::group_norm(xv, groups, nodes_[gamma.idx_].value, nodes_[beta.idx_].value, eps);
    if (!wants_grad({x, gamma, beta})) return push(std::move(out), false, nullptr);

    const std::size_t channels = xv.dim(0), length = xv.dim(1);
    const std::size_t per_group = channels / groups;
    // cache per-group mean and 1/std for the backward pass
    std::vector<double> means(groups), inv_stds(groups);
    for (std::size_t g = 0; g < groups; ++g) {
        const std::size_t c0 = g * per_group;
        const double count = static_cast<double>(per_group * length);
        double mean = 0.0;
        for (std::size_t c = c0; c < c0 + per_group; ++c)
            for (std::size_t l = 0; l < length; ++l) mean += xv.at(c, l);
        mean /= count;
        double var = 0.0;
        for (std::size_t c = c0; c < c0 + per_group; ++c)
            for (std::size_t l = 0; l < length; ++l) {
                const double d = xv.at(c, l) - mean;
                var += d * d;
            }
        var /= count;
        means[g] = mean;
        inv_stds[g] = 1.0 / std::sqrt(var + eps);
    }
    const std::size_t ix = x.idx_, ig = gamma.idx_, ib = beta.idx_;
    return push(std::move(out), true,
                [ix, ig, ib, groups, per_group, means, inv_stds](Tape& t, const Array& g) {
        const Array& xv = t.nodes_[ix].value;
        const Array& gm = t.nodes_[ig].value;
        const std::size_t length = xv.dim(1);
        const double count = static_cast<double>(per_group * length);
        const bool need_x = t.nodes_[ix].requires_grad;
        const bool need_g = t.nodes_[ig].requires_grad;
        const bool need_b = t.nodes_[ib].requires_grad;
        Array* dx = need_x ? &t.grad_buf(ix) : nullptr;
        Array* dg = need_g ? &t.grad_buf(ig) : nullptr;
        Array* db = need_b ? &t.grad_buf(ib) : nullptr;
        for (std::size_t grp = 0; grp < groups; ++grp) {
            const std::size_t c0 = grp * per_group;
            const double mean = means[grp], inv_std = inv_stds[grp];
            double sum_dxhat = 0.0, sum_dxhat_xhat = 0.0;
            for (std::size_t c = c0; c < c0 + per_group; ++c) {
                for (std::size_t l = 0; l < length; ++l) {
                    const double xhat = (xv.at(c, l) - mean) * inv_std;
                    const double gv = g.at(c, l);
                    if (dg) (*dg)[c] += gv * xhat;
                    if (db) (*db)[c] += gv;
                    const double dxhat = gv * gm[c];
                    sum_dxhat += dxhat;
                    sum_dxhat_xhat += dxhat * xhat;
                }
            }
            if (!dx) continue;
            for (std::size_t c = c0; c < c0 + per_group; ++c) {
                for (std::size_t l = 0; l < length; ++l) {
                    const double xhat = (xv.at(c, l) - mean) * inv_std;
                    const double dxhat = g.at(c, l) * gm[c];
                    dx->at(c, l) += inv_std *
                                    (dxhat - sum_dxhat / count - xhat * sum_dxhat_xhat / count);
                }
            }
        }
    });
}

Value Tape::pool1d(Value x, ops::PoolKind kind, std::size_t kernel, std::size_t stride) {
    check(x, "pool1d");
    const Array& xv = nodes_[x.idx_].value;
    Array out = ops::pool1d(xv, kind, kernel, stride);
    if (!wants_grad({x})) return push(std::move(out), false, nullptr);
    const std::size_t channels = xv.dim(0), length = xv.dim(1);
    const std::size_t out_len = out.dim(1);
    const std::size_t p = (kernel - 1) / 2;
    const std::size_t ix = x.idx_;
    if (kind == ops::PoolKind::Avg) {
        return push(std::move(out), true,
                    [ix, kernel, stride, p, length](Tape& t, const Array& g) {
            Array& dx = t.grad_buf(ix);
            const double inv_k = 1.0 / static_cast<double>(kernel);
            for (std::size_t c = 0; c < g.dim(0); ++c) {
                for (std::size_t o = 0; o < g.dim(1); ++o) {
                    const double gv = g.at(c, o) * inv_k;
                    const std::ptrdiff_t base = static_cast<std::ptrdiff_t>(o * stride) -
                                                static_cast<std::ptrdiff_t>(p);
                    for (std::size_t j = 0; j < kernel; ++j) {
                        std::ptrdiff_t il = base + static_cast<std::ptrdiff_t>(j);
                        il = std::clamp<std::ptrdiff_t>(il, 0,
                                                        static_cast<std::ptrdiff_t>(length) - 1);
                        dx.at(c, static_cast<std::size_t>(il)) += gv;
                    }
                }
            }
        });
    }
    // max: record argmax (first maximum, replicate-clamped index) at forward time
    std::vector<std::size_t> argmax(channels * out_len);
    for (std::size_t c = 0; c < channels; ++c) {
        for (std::size_t o = 0; o < out_len; ++o) {
            const std::ptrdiff_t base =
                static_cast<std::ptrdiff_t>(o * stride) - static_cast<std::ptrdiff_t>(p);
            double best = -std::numeric_limits<double>::infinity();
            std::size_t best_idx = 0;
            for (std::size_t j = 0; j < kernel; ++j) {
                std::ptrdiff_t il = base + static_cast<std::ptrdiff_t>(j);
                il = std::clamp<std::ptrdiff_t>(il, 0, static_cast<std::ptrdiff_t>(length) - 1);
                const double v = xv.at(c, static_cast<std::size_t>(il));
                if (v > best) {
                    best = v;
                    best_idx = static_cast<std::size_t>(il);
                }
            }
            argmax[c * out_len + o] = best_idx;
        }
    }
    return push(std::move(out), true, [ix, argmax, out_len](Tape& t, const Array& g) {
        Array& dx = t.grad_buf(ix);
        for (std::size_t c = 0; c < g.dim(0); ++c)
            for (std::size_t o = 0; o < g.dim(1); ++o)
                dx.at(c, argmax[c * out_len + o]) += g.at(c, o);
    });
}

Value Tape::softmax(Value x, std::size_t axis) {
    check(x, "softmax");
    Array out = ops::softmax(nodes_[x.idx_].value, axis);
    if (!wants_grad({x})) return push(std::move(out), false, nullptr);
    const std::size_t ix = x.idx_;
    Value v = push(std::move(out), true, nullptr);
    const std::size_t io = v.idx_;
    nodes_[io].backward = [ix, io, axis](Tape& t, const Array& g) {
        const Array& y = t.nodes_[io].value;
        Array& dx = t.grad_buf(ix);
        std::size_t inner = 1, outer = 1;
        const std::size_t n = y.dim(axis);
        for (std::size_t i = 0; i < axis; ++i) outer *= y.dim(i);
        for (std::size_t i = axis + 1; i < y.rank(); ++i) inner *= y.dim(i);
        for (std::size_t o = 0; o < outer; ++o) {
            for (std::size_t in = 0; in < inner; ++in) {
                const std::size_t base = o * n * inner + in;
                double dot = 0.0;
                for (std::size_t k = 0; k < n; ++k)
                    dot += g[base + k * inner] * y[base + k * inner];
                for (std::size_t k = 0; k < n; ++k) {
                    const std::size_t at = base + k * inner;
                    dx[at] += y[at] * (g[at] - dot);
                }
            }
        }
    };
    return v;
}

Value Tape::concat_axis0(Value a, Value b) {
    check(a, "concat");
    check(b, "concat");
    const Array& av = nodes_[a.idx_].value;
    Array out = ops::concat_axis0(av, nodes_[b.idx_].value);
    if (!wants_grad({a, b})) return push(std::move(out), false, nullptr);
    const std::size_t ia = a.idx_, ib = b.idx_;
    const std::size_t split = av.size();
    return push(std::move(out), true, [ia, ib, split](Tape& t, const Array& g) {
        if (t.nodes_[ia].requires_grad) {
            Array& da = t.grad_buf(ia);
            for (std::size_t i = 0; i < split; ++i) da[i] += g[i];
        }
        if (t.nodes_[ib].requires_grad) {
            Array& db = t.grad_buf(ib);
            for (std::size_t i = 0; i < g.size() - split; ++i) db[i] += g[split + i];
        }
    });
}

Value Tape::slice_axis0(Value a, std::size_t from, std::size_t to) {
    check(a, "slice");
    const Array& av = nodes_[a.idx_].value;
    Array out = ops::slice_axis0(av, from, to);
    if (!wants_grad({a})) return push(std::move(out), false, nullptr);
    const std::size_t ia = a.idx_;
    const std::size_t row = av.size() / av.dim(0);
    return push(std::move(out), true, [ia, from, row](Tape& t, const Array& g) {
        Array& da = t.grad_buf(ia);
        for (std::size_t i = 0; i < g.size(); ++i) da[from * row + i] += g[i];
    });
}

Value Tape::upsample_nearest(Value x, std::size_t factor) {
    check(x, "upsample");
    Array out = ops::upsample_nearest(nodes_[x.idx_].value, factor);
    if (!wants_grad({x})) return push(std::move(out), false, nullptr);
    const std::size_t ix = x.idx_;
    return push(std::move(out), true, [ix, factor](Tape& t, const Array& g) {
        Array& dx = t.grad_buf(ix);
        const std::size_t src_len = dx.rank() == 1 ? dx.dim(0) : dx.dim(1);
        const std::size_t channels = dx.rank() == 1 ? 1 : dx.dim(0);
        for (std::size_t c = 0; c < channels; ++c)
            for (std::size_t l = 0; l < src_len; ++l) {
                double acc = 0.0;
                for (std::size_t f = 0; f < factor; ++f)
                    acc += g[c * src_len * factor + l * factor + f];
                dx[c * src_len + l] += acc;
            }
    });
}

Value Tape::reshape(Value a, Shape shape) {
    check(a, "reshape");
    const Array& av = nodes_[a.idx_].value;
    if (shape_count(shape) != av.size()) {
        throw ShapeError("reshape: cannot view " + shape_str(av.shape()) + " as " +
                         shape_str(shape));
    }
    Array out(shape, av.values());
    if (!wants_grad({a})) return push(std::move(out), false, nullptr);
    const std::size_t ia = a.idx_;
    return push(std::move(out), true, [ia](Tape& t, const Array& g) {
        Array& da = t.grad_buf(ia);
        for (std::size_t i = 0; i < g.size(); ++i) da[i] += g[i];
    });
}

Value Tape::add_channel_bias(Value x, Value bias) {
    check(x, "add_channel_bias");
    check(bias, "add_channel_bias");
    const Array& xv = nodes_[x.idx_].value;
    const Array& bv = nodes_[bias.idx_].value;
    if (xv.rank() != 2 || bv.rank() != 1 || bv.dim(0) != xv.dim(0)) {
        throw ShapeError("add_channel_bias: " + shape_str(xv.shape()) + " + " +
                         shape_str(bv.shape()));
    }
    Array out(xv.shape());
    for (std::size_t c = 0; c < xv.dim(0); ++c)
        for (std::size_t l = 0; l < xv.dim(1); ++l) out.at(c, l) = xv.at(c, l) + bv[c];
    if (!wants_grad({x, bias})) return push(std::move(out), false, nullptr);
    const std::size_t ix = x.idx_, ib = bias.idx_;
    return push(std::move(out), true, [ix, ib](Tape& t, const Array& g) {
        t.accumulate(ix, g);
        if (t.nodes_[ib].requires_grad) {
            Array& db = t.grad_buf(ib);
            for (std::size_t c = 0; c < g.dim(0); ++c)
                for (std::size_t l = 0; l < g.dim(1); ++l) db[c] += g.at(c, l);
        }
    });
}

Value Tape::linear(Value weight, Value x, Value bias) {
    check(weight, "linear");
    check(x, "linear");
    check(bias, "linear");
    const Array& wv = nodes_[weight.idx_].value;
    const Array& xv = nodes_[x.idx_].value;
    const Array& bv = nodes_[bias.idx_].value;
    if (wv.rank() != 2 || xv.rank() != 1 || bv.rank() != 1 || wv.dim(1) != xv.dim(0) ||
        wv.dim(0) != bv.dim(0)) {
        throw ShapeError("linear: W " + shape_str(wv.shape()) + ", x " + shape_str(xv.shape()) +
                         ", b " + shape_str(bv.shape()));
    }
    const std::size_t out_n = wv.dim(0), in_n = wv.dim(1);
    Array out({out_n});
    for (std::size_t i = 0; i < out_n; ++i) {
        double acc = bv[i];
        for (std::size_t j = 0; j < in_n; ++j) acc += wv.at(i, j) * xv[j];
        out[i] = acc;
    }
    if (!wants_grad({weight, x, bias})) return push(std::move(out), false, nullptr);
    const std::size_t iw = weight.idx_, ix = x.idx_, ib = bias.idx_;
    return push(std::move(out), true, [iw, ix, ib](Tape& t, const Array& g) {
        const Array& wv = t.nodes_[iw].value;
        const Array& xv = t.nodes_[ix].value;
        const std::size_t out_n = wv.dim(0), in_n = wv.dim(1);
        if (t.nodes_[iw].requires_grad) {
            Array& dw = t.grad_buf(iw);
            for (std::size_t i = 0; i < out_n; ++i)
                for (std::size_t j = 0; j < in_n; ++j) dw.at(i, j) += g[i] * xv[j];
        }
        if (t.nodes_[ix].requires_grad) {
            Array& dx = t.grad_buf(ix);
            for (std::size_t i = 0; i < out_n; ++i)
                for (std::size_t j = 0; j < in_n; ++j) dx[j] += wv.at(i, j) * g[i];
        }
        if (t.nodes_[ib].requires_grad) t.accumulate(ib, g);
    });
}

Value Tape::sum_all(Value a) {
    check(a, "sum_all");
    Array out = Array::scalar(ops::sum_all(nodes_[a.idx_].value));
    if (!wants_grad({a})) return push(std::move(out), false, nullptr);
    const std::size_t ia = a.idx_;
    return push(std::move(out), true, [ia](Tape& t, const Array& g) {
        Array& da = t.grad_buf(ia);
        for (std::size_t i = 0; i < da.size(); ++i) da[i] += g[0];
    });
}

Value Tape::mean_all(Value a) {
    check(a, "mean_all");
    const std::size_t n = nodes_[a.idx_].value.size();
    Array out = Array::scalar(ops::mean_all(nodes_[a.idx_].value));
    if (!wants_grad({a})) return push(std::move(out), false, nullptr);
    const std::size_t ia = a.idx_;
    return push(std::move(out), true, [ia, n](Tape& t, const Array& g) {
        Array& da = t.grad_buf(ia);
        const double gv = g[0] / static_cast<double>(n);
        for (std::size_t i = 0; i < da.size(); ++i) da[i] += gv;
    });
}

TapeParams bind_params(Tape& tape, const ParamMap& params, bool requires_grad) {
    TapeParams bound;
    for (const auto& [name, array] : params) {
        bound.emplace(name, tape.leaf(array, requires_grad));
    }
    return bound;
}

void Tape::backward(Value loss) {
    check(loss, "backward");
    if (!recording_) throw GraphError("backward: tape is not recording");
    const Node& top = nodes_[loss.idx_];
    if (top.value.size() != 1) throw GraphError("backward: loss must be scalar");
    for (Node& node : nodes_) node.grad = Array();
    grad_buf(loss.idx_)[0] = 1.0;
    for (std::size_t i = loss.idx_ + 1; i-- > 0;) {
        Node& node = nodes_[i];
        if (node.requires_grad && !node.grad.empty() && node.backward) node.backward(*this, node.grad);
    }
}

}  // namespace diffmts
