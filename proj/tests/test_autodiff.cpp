#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "diffmts/tape.hpp"
#include "test_util.hpp"

using namespace diffmts;
using testutil::GradCheck;
using testutil::random_array;

namespace {

// weight every output entry with a fixed random projection so the scalar loss
// exercises all coordinates; the rng is re-seeded per call so repeated
// evaluations of the same build see the same weights
Value project(Tape& tape, Value v, std::uint64_t seed) {
    Rng rng(seed);
    Array w(v.shape());
    for (std::size_t i = 0; i < w.size(); ++i) w[i] = rng.uniform(-1.0, 1.0);
    return tape.sum_all(tape.mul(v, tape.constant(w)));
}

}  // namespace

TEST_CASE("closed-form gradient: sum of squares") {
    Tape tape;
    Value x = tape.leaf(Array({2}, {1.0, 2.0}), true);
    Value loss = tape.sum_all(tape.mul(x, x));
    tape.backward(loss);
    Array g = tape.grad(x);
    CHECK(g[0] == doctest::Approx(2.0));
    CHECK(g[1] == doctest::Approx(4.0));
}

TEST_CASE("constant inputs get zero gradient") {
    Tape tape;
    Value x = tape.leaf(Array({3}, {1.0, 2.0, 3.0}), true);
    Value c = tape.leaf(Array({3}, {5.0, 5.0, 5.0}), true);
    Value loss = tape.sum_all(tape.mul(x, x));
    tape.backward(loss);
    Array g = tape.grad(c);  // c never participates
    for (std::size_t i = 0; i < 3; ++i) CHECK(g[i] == 0.0);
}

TEST_CASE("backward on a foreign value is a graph error") {
    Tape a, b;
    Value x = a.leaf(Array::scalar(1.0), true);
    CHECK_THROWS_AS(b.backward(x), GraphError);
    Value y;
    CHECK_THROWS_AS(a.backward(y), GraphError);
}

TEST_CASE("backward requires a scalar loss") {
    Tape tape;
    Value x = tape.leaf(Array({2}, {1.0, 2.0}), true);
    CHECK_THROWS_AS(tape.backward(x), GraphError);
}

TEST_CASE("finite differences across every differentiable op") {
    GradCheck check;
    Rng rng(100);
    int cases = 0;

    for (int trial = 0; trial < 12; ++trial) {
        const std::size_t c = 1 + rng.index(4);
        const std::size_t l = 3 + rng.index(10);
        const std::uint64_t seed = 1000 + static_cast<std::uint64_t>(trial);

        {  // conv1d with same padding, stride 1 or 2
            const std::size_t c_out = 1 + rng.index(4);
            const std::size_t k = 1 + rng.index(4);
            ParamMap inputs;
            inputs.emplace("x", random_array(rng, {c, l}));
            inputs.emplace("w", random_array(rng, {c_out, c, k}));
            inputs.emplace("b", random_array(rng, {c_out}));
            const std::size_t stride = 1 + rng.index(2);
            const double err = check.run(inputs, [&](Tape& t, const TapeParams& p) {
                Value out = t.conv1d(p.at("x"), p.at("w"), p.at("b"), stride, ops::Pad::same());
                return project(t, out, seed);
            });
            CHECK(err < 1e-4);
            ++cases;
        }
        {  // group_norm
            const std::size_t channels = 2 * (1 + rng.index(3));
            ParamMap inputs;
            inputs.emplace("x", random_array(rng, {channels, l}, -2.0, 2.0));
            inputs.emplace("gamma", random_array(rng, {channels}, 0.5, 1.5));
            inputs.emplace("beta", random_array(rng, {channels}));
            const double err = check.run(inputs, [&](Tape& t, const TapeParams& p) {
                Value out = t.group_norm(p.at("x"), 2, p.at("gamma"), p.at("beta"), 1e-5);
                return project(t, out, seed + 1);
            });
            CHECK(err < 1e-4);
            ++cases;
        }
        {  // activations
            for (ops::Act kind : {ops::Act::SiLU, ops::Act::GeLU, ops::Act::Sigmoid,
                                  ops::Act::Tanh, ops::Act::Softplus}) {
                ParamMap inputs;
                inputs.emplace("x", random_array(rng, {c, l}, -3.0, 3.0));
                const double err = check.run(inputs, [&](Tape& t, const TapeParams& p) {
                    return project(t, t.activation(p.at("x"), kind), seed + 2);
                });
                CHECK(err < 1e-4);
                ++cases;
            }
        }
        {  // pooling
            ParamMap inputs;
            inputs.emplace("x", random_array(rng, {c, l}, -4.0, 4.0));
            double err = check.run(inputs, [&](Tape& t, const TapeParams& p) {
                return project(t, t.pool1d(p.at("x"), ops::PoolKind::Avg, 3, 1), seed + 3);
            });
            CHECK(err < 1e-4);
            err = check.run(inputs, [&](Tape& t, const TapeParams& p) {
                return project(t, t.pool1d(p.at("x"), ops::PoolKind::Max, 3, 1), seed + 4);
            });
            CHECK(err < 1e-4);
            cases += 2;
        }
        {  // softmax over both axes
            ParamMap inputs;
            inputs.emplace("x", random_array(rng, {c, l}, -2.0, 2.0));
            for (std::size_t axis : {std::size_t{0}, std::size_t{1}}) {
                const double err = check.run(inputs, [&](Tape& t, const TapeParams& p) {
                    return project(t, t.softmax(p.at("x"), axis), seed + 5 + axis);
                });
                CHECK(err < 1e-4);
                ++cases;
            }
        }
        {  // matmul + transpose
            const std::size_t m = 1 + rng.index(4), k = 1 + rng.index(4), n = 1 + rng.index(4);
            ParamMap inputs;
            inputs.emplace("a", random_array(rng, {m, k}));
            inputs.emplace("b", random_array(rng, {k, n}));
            const double err = check.run(inputs, [&](Tape& t, const TapeParams& p) {
                Value out = t.matmul(t.transpose(t.transpose(p.at("a"))), p.at("b"));
                return project(t, out, seed + 7);
            });
            CHECK(err < 1e-4);
            ++cases;
        }
        {  // elementwise add/sub/mul/scale/exp chain
            ParamMap inputs;
            inputs.emplace("a", random_array(rng, {c, l}));
            inputs.emplace("b", random_array(rng, {c, l}));
            const double err = check.run(inputs, [&](Tape& t, const TapeParams& p) {
                Value mixed = t.add(t.mul(p.at("a"), p.at("b")),
                                    t.scale(t.sub(p.at("a"), p.at("b")), 0.5));
                Value curved = t.exp(t.scale(mixed, 0.3));
                return project(t, t.add_scalar(curved, 0.1), seed + 8);
            });
            CHECK(err < 1e-4);
            ++cases;
        }
        {  // concat + slice + upsample + reshape
            ParamMap inputs;
            inputs.emplace("a", random_array(rng, {c, l}));
            inputs.emplace("b", random_array(rng, {c, l}));
            const double err = check.run(inputs, [&](Tape& t, const TapeParams& p) {
                Value cat = t.concat_axis0(p.at("a"), p.at("b"));
                Value sliced = t.slice_axis0(cat, 0, c + 1);
                Value up = t.upsample_nearest(sliced, 2);
                Value flat = t.reshape(up, {(c + 1) * l * 2});
                return project(t, flat, seed + 9);
            });
            CHECK(err < 1e-4);
            ++cases;
        }
        {  // linear + add_channel_bias
            const std::size_t out_n = 1 + rng.index(5), in_n = 1 + rng.index(5);
            ParamMap inputs;
            inputs.emplace("w", random_array(rng, {out_n, in_n}));
            inputs.emplace("x", random_array(rng, {in_n}));
            inputs.emplace("b", random_array(rng, {out_n}));
            inputs.emplace("fm", random_array(rng, {out_n, l}));
            const double err = check.run(inputs, [&](Tape& t, const TapeParams& p) {
                Value y = t.linear(p.at("w"), p.at("x"), p.at("b"));
                Value biased = t.add_channel_bias(p.at("fm"), y);
                return project(t, biased, seed + 10);
            });
            CHECK(err < 1e-4);
            ++cases;
        }
        {  // mean over all entries
            ParamMap inputs;
            inputs.emplace("x", random_array(rng, {c, l}));
            const double err = check.run(inputs, [&](Tape& t, const TapeParams& p) {
                return t.mean_all(t.mul(p.at("x"), p.at("x")));
            });
            CHECK(err < 1e-4);
            ++cases;
        }
    }
    CHECK(cases >= 100);  // the whole suite spans at least 100 random cases
}
