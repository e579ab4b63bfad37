#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "diffmts/schedule.hpp"
#include "diffmts/rng.hpp"

using namespace diffmts;

namespace {

// long-double transcription of the cosine recipe, independent of the
// production code path
long double cosine_f_ld(long double t, long double total, long double s) {
    const long double pi = 3.14159265358979323846264338327950288L;
    const long double x = ((t / total + s) / (1.0L + s)) * (pi / 2.0L);
    const long double c = std::cos(x);
    return c * c;
}

std::vector<long double> cosine_alpha_bar_oracle(std::size_t total, long double s) {
    std::vector<long double> abar(total + 1, 1.0L);
    for (std::size_t t = 1; t <= total; ++t) {
        const long double ratio =
            cosine_f_ld(static_cast<long double>(t), static_cast<long double>(total), s) /
            cosine_f_ld(static_cast<long double>(t) - 1.0L, static_cast<long double>(total), s);
        long double beta = 1.0L - ratio;
        if (beta > 0.999L) beta = 0.999L;
        abar[t] = abar[t - 1] * (1.0L - beta);
    }
    return abar;
}

}  // namespace

TEST_CASE("table invariants hold for both kinds") {
    for (ScheduleKind kind : {ScheduleKind::Linear, ScheduleKind::Cosine}) {
        for (std::size_t total : {std::size_t{1}, std::size_t{10}, std::size_t{137},
                                  std::size_t{1000}}) {
            ScheduleTable table = ScheduleTable::make(kind, total);
            CHECK(table.alpha_bar(0) == 1.0);
            double prod = 1.0;
            for (std::size_t t = 1; t <= total; ++t) {
                const double beta = table.beta(t);
                CHECK(beta > 0.0);
                CHECK(beta <= 0.999);
                CHECK(table.alpha(t) == 1.0 - beta);
                prod *= 1.0 - beta;
                CHECK(std::abs(table.alpha_bar(t) - prod) <= 1e-12);
                CHECK(table.alpha_bar(t) < table.alpha_bar(t - 1));  // strictly decreasing
                CHECK(table.posterior_var(t) >= 0.0);
                CHECK(table.posterior_var(t) <= beta + 1e-15);
            }
            CHECK(table.posterior_var(1) == 0.0);
        }
    }
}

TEST_CASE("linear schedule follows 1/(T - t + 1) with terminal clipping") {
    ScheduleTable table = ScheduleTable::make(ScheduleKind::Linear, 10);
    for (std::size_t t = 1; t <= 9; ++t) {
        CHECK(table.beta(t) == doctest::Approx(1.0 / (10.0 - t + 1.0)).epsilon(1e-15));
    }
    CHECK(table.beta(10) == 0.999);  // printed rule gives 1; clipped to keep alpha > 0
}

TEST_CASE("cosine alpha_bar matches the closed-form oracle") {
    for (std::size_t total : {std::size_t{10}, std::size_t{50}, std::size_t{1000}}) {
        ScheduleTable table = ScheduleTable::make(ScheduleKind::Cosine, total);
        const std::vector<long double> oracle = cosine_alpha_bar_oracle(total, 0.008L);
        for (std::size_t t = 0; t <= total; ++t) {
            CHECK(std::abs(static_cast<long double>(table.alpha_bar(t)) - oracle[t]) < 1e-12L);
        }
    }
    // spot value straight from the formula, T=10, t=5
    ScheduleTable table = ScheduleTable::make(ScheduleKind::Cosine, 10);
    const long double s = 0.008L;
    const long double direct = cosine_f_ld(5.0L, 10.0L, s) / cosine_f_ld(0.0L, 10.0L, s);
    CHECK(std::abs(static_cast<long double>(table.alpha_bar(5)) - direct) < 1e-12L);
}

TEST_CASE("cosine alpha_bar decays to nearly zero for long schedules") {
    ScheduleTable table = ScheduleTable::make(ScheduleKind::Cosine, 100);
    CHECK(table.alpha_bar(100) < 0.01);
}

TEST_CASE("cosine holds its alpha_bar mass through the first half of the schedule") {
    // The Eq.-4 linear rule telescopes to abar_t = (T-t)/T, and its full sum
    // (T-1)/2 actually edges out the cosine sum at every matched T; what the
    // cosine schedule does win is the early part of the trajectory, where the
    // signal still matters. Assert the partial-sum dominance through T/2.
    for (std::size_t total : {std::size_t{10}, std::size_t{50}, std::size_t{200}}) {
        ScheduleTable cosine = ScheduleTable::make(ScheduleKind::Cosine, total);
        ScheduleTable linear = ScheduleTable::make(ScheduleKind::Linear, total);
        double sum_cos = 0.0, sum_lin = 0.0;
        for (std::size_t t = 1; t <= (total + 1) / 2; ++t) {
            sum_cos += cosine.alpha_bar(t);
            sum_lin += linear.alpha_bar(t);
            CHECK(sum_cos > sum_lin);
        }
    }
}

TEST_CASE("configuration errors") {
    CHECK_THROWS_AS(ScheduleTable::make(ScheduleKind::Cosine, 0), ConfigError);
    CHECK_THROWS_AS(ScheduleTable::make(ScheduleKind::Cosine, 10, -1.0), ConfigError);
    CHECK_THROWS_AS(schedule_kind_from_string("quadratic"), ConfigError);
}

TEST_CASE("q_sample") {
    ScheduleTable table = ScheduleTable::make(ScheduleKind::Cosine, 50);
    Array x0({2, 3}, {1.0, -0.5, 0.25, 0.0, 2.0, -1.0});
    Array eps({2, 3}, {0.1, 0.2, -0.3, 0.4, -0.5, 0.6});

    SUBCASE("t = 0 returns x0 unchanged") {
        Array out = q_sample(x0, 0, eps, table);
        for (std::size_t i = 0; i < x0.size(); ++i) CHECK(out[i] == x0[i]);
    }
    SUBCASE("zero signal leaves only scaled noise") {
        Array zeros(x0.shape());
        Array out = q_sample(zeros, 7, eps, table);
        const double scale = std::sqrt(1.0 - table.alpha_bar(7));
        for (std::size_t i = 0; i < out.size(); ++i) {
            CHECK(out[i] == doctest::Approx(scale * eps[i]).epsilon(1e-15));
        }
    }
    SUBCASE("closed-form scalar arithmetic") {
        Array one({1}, {1.0});
        Array noise({1}, {0.5});
        for (std::size_t t = 1; t <= 50; ++t) {
            Array out = q_sample(one, t, noise, table);
            const double expected =
                std::sqrt(table.alpha_bar(t)) + std::sqrt(1.0 - table.alpha_bar(t)) * 0.5;
            CHECK(out[0] == doctest::Approx(expected).epsilon(1e-15));
        }
    }
    SUBCASE("out-of-range timestep") {
        CHECK_THROWS_AS(q_sample(x0, 51, eps, table), IndexError);
    }
    SUBCASE("shape mismatch") {
        Array bad({1, 3});
        CHECK_THROWS_AS(q_sample(x0, 3, bad, table), ShapeError);
    }
}

TEST_CASE("q_sample Monte Carlo statistics") {
    ScheduleTable table = ScheduleTable::make(ScheduleKind::Cosine, 100);
    Rng rng(11);
    const double x0_val = 0.75;
    Array x0({1}, {x0_val});
    for (std::size_t t : {std::size_t{5}, std::size_t{50}, std::size_t{95}}) {
        const std::size_t draws = 100000;
        double mean = 0.0, sq = 0.0;
        for (std::size_t i = 0; i < draws; ++i) {
            Array eps({1}, {rng.normal()});
            const double v = q_sample(x0, t, eps, table)[0];
            mean += v;
            sq += v * v;
        }
        mean /= draws;
        const double stddev = std::sqrt(sq / draws - mean * mean);
        const double expect_mean = std::sqrt(table.alpha_bar(t)) * x0_val;
        const double expect_std = std::sqrt(1.0 - table.alpha_bar(t));
        CHECK(std::abs(mean - expect_mean) < 0.01);
        CHECK(std::abs(stddev - expect_std) / expect_std < 0.01);
    }
}

TEST_CASE("posterior coefficients") {
    ScheduleTable table = ScheduleTable::make(ScheduleKind::Cosine, 40);
    SUBCASE("variance vanishes at t = 1") {
        CHECK(posterior_coeffs(table, 1).variance == 0.0);
    }
    SUBCASE("hand-evaluated formulas") {
        for (std::size_t t : {std::size_t{2}, std::size_t{17}, std::size_t{40}}) {
            PosteriorCoeffs c = posterior_coeffs(table, t);
            const double alpha = table.alpha(t);
            const double beta = table.beta(t);
            const double abar = table.alpha_bar(t);
            const double abar_prev = table.alpha_bar(t - 1);
            CHECK(c.coef_xt == doctest::Approx(1.0 / std::sqrt(alpha)).epsilon(1e-15));
            CHECK(c.coef_eps == doctest::Approx(beta / std::sqrt(1.0 - abar)).epsilon(1e-15));
            CHECK(c.variance ==
                  doctest::Approx((1.0 - abar_prev) / (1.0 - abar) * beta).epsilon(1e-15));
        }
    }
    SUBCASE("coef_xt exceeds one everywhere") {
        for (std::size_t t = 1; t <= 40; ++t) CHECK(posterior_coeffs(table, t).coef_xt > 1.0);
    }
    SUBCASE("out of range") {
        CHECK_THROWS_AS(posterior_coeffs(table, 0), IndexError);
        CHECK_THROWS_AS(posterior_coeffs(table, 41), IndexError);
    }
}
