#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "diffmts/adam.hpp"
#include "test_util.hpp"

using namespace diffmts;

TEST_CASE("zero gradients are a fixed point") {
    ParamMap params;
    params.emplace("p", Array({3}, {1.0, -2.0, 0.5}));
    AdamState state = AdamState::init(params);
    ParamMap grads;
    grads.emplace("p", Array({3}));
    AdamConfig cfg;
    adam_step(params, grads, state, cfg);
    CHECK(params.at("p")[0] == 1.0);
    CHECK(params.at("p")[1] == -2.0);
    CHECK(params.at("p")[2] == 0.5);
    CHECK(state.m.at("p")[0] == 0.0);
    CHECK(state.v.at("p")[0] == 0.0);
    CHECK(state.step == 1);
}

TEST_CASE("one hand-evaluated step") {
    ParamMap params;
    params.emplace("p", Array({1}, {1.0}));
    AdamState state = AdamState::init(params);
    ParamMap grads;
    grads.emplace("p", Array({1}, {1.0}));
    AdamConfig cfg;
    cfg.lr = 0.1;
    adam_step(params, grads, state, cfg);
    // bias-corrected mhat = vhat = 1, so the step is lr / (1 + eps)
    CHECK(params.at("p")[0] == doctest::Approx(0.9).epsilon(1e-7));
    CHECK(state.step == 1);
}

TEST_CASE("repeated steps descend a quadratic") {
    ParamMap params;
    params.emplace("p", Array({1}, {5.0}));
    AdamState state = AdamState::init(params);
    AdamConfig cfg;
    cfg.lr = 0.1;
    for (int i = 0; i < 100; ++i) {
        ParamMap grads;
        grads.emplace("p", Array({1}, {2.0 * params.at("p")[0]}));  // d/dp of p^2
        adam_step(params, grads, state, cfg);
    }
    CHECK(std::abs(params.at("p")[0]) < 0.5);
    CHECK(state.step == 100);
}

TEST_CASE("non-finite gradient names the parameter") {
    ParamMap params;
    params.emplace("layer.w", Array({1}, {1.0}));
    AdamState state = AdamState::init(params);
    ParamMap grads;
    grads.emplace("layer.w", Array({1}, {std::nan("")}));
    AdamConfig cfg;
    try {
        adam_step(params, grads, state, cfg);
        FAIL("expected TrainingError");
    } catch (const TrainingError& e) {
        CHECK(std::string(e.what()).find("layer.w") != std::string::npos);
    }
}

TEST_CASE("gradient clipping scales down to the target norm") {
    ParamMap grads;
    grads.emplace("a", Array({2}, {3.0, 4.0}));  // norm 5
    const double norm = clip_grad_norm(grads, 1.0);
    CHECK(norm == doctest::Approx(5.0));
    CHECK(grads.at("a")[0] == doctest::Approx(0.6));
    CHECK(grads.at("a")[1] == doctest::Approx(0.8));
}
