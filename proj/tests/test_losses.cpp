#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "diffmts/losses.hpp"
#include "test_util.hpp"

using namespace diffmts;
using testutil::random_normal;

namespace {

// Independent transcription of the estimator: build the full kernel matrices,
// then average. Median bandwidth recomputed the slow way.
double mmd_bruteforce(const std::vector<Array>& n, const std::vector<Array>& m,
                      const std::vector<double>& scales) {
    std::vector<const Array*> joint;
    for (const Array& a : n) joint.push_back(&a);
    for (const Array& a : m) joint.push_back(&a);
    std::vector<double> dists;
    for (std::size_t i = 0; i < joint.size(); ++i) {
        for (std::size_t j = i + 1; j < joint.size(); ++j) {
            double d2 = 0.0;
            for (std::size_t k = 0; k < joint[i]->size(); ++k) {
                const double d = (*joint[i])[k] - (*joint[j])[k];
                d2 += d * d;
            }
            dists.push_back(std::sqrt(d2));
        }
    }
    std::sort(dists.begin(), dists.end());
    double h = 1.0;
    if (!dists.empty()) {
        h = dists.size() % 2 == 1 ? dists[dists.size() / 2]
                                  : 0.5 * (dists[dists.size() / 2 - 1] + dists[dists.size() / 2]);
        if (h <= 0.0) h = 1.0;
    }
    auto kernel = [&](const Array& a, const Array& b) {
        double d2 = 0.0;
        for (std::size_t k = 0; k < a.size(); ++k) {
            const double d = a[k] - b[k];
            d2 += d * d;
        }
        double acc = 0.0;
        for (double s : scales) acc += std::exp(-d2 / (2.0 * (s * h) * (s * h)));
        return acc / static_cast<double>(scales.size());
    };
    double knn = 0.0, kmn = 0.0, kmm = 0.0;
    for (const Array& a : n)
        for (const Array& b : n) knn += kernel(a, b);
    for (const Array& a : m)
        for (const Array& b : n) kmn += kernel(a, b);
    for (const Array& a : m)
        for (const Array& b : m) kmm += kernel(a, b);
    const double nn = static_cast<double>(n.size()), mm = static_cast<double>(m.size());
    return knn / (nn * nn) - 2.0 * kmn / (mm * nn) + kmm / (mm * mm);
}

}  // namespace

TEST_CASE("noise_mse") {
    SUBCASE("identical arrays give zero") {
        Array a({2, 3}, {1, 2, 3, 4, 5, 6});
        CHECK(noise_mse(a, a) == 0.0);
    }
    SUBCASE("unit offset gives one") {
        Array z({4});
        Array o = Array::full({4}, 1.0);
        CHECK(noise_mse(z, o) == doctest::Approx(1.0));
    }
    SUBCASE("random pair against a two-pass accumulation") {
        Rng rng(1);
        Array a = random_normal(rng, {3, 7});
        Array b = random_normal(rng, {3, 7});
        double acc = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
        CHECK(std::abs(noise_mse(a, b) - acc / a.size()) < 1e-12);
    }
    SUBCASE("shape mismatch") {
        CHECK_THROWS_AS(noise_mse(Array({2}), Array({3})), ShapeError);
    }
}

TEST_CASE("mmd estimator") {
    KernelSpec kernel;

    SUBCASE("identical sample sets cancel to exactly zero") {
        Rng rng(2);
        std::vector<Array> x;
        for (int i = 0; i < 8; ++i) x.push_back(random_normal(rng, {5}));
        CHECK(mmd(x, x, kernel) == 0.0);
    }
    SUBCASE("symmetry") {
        Rng rng(3);
        std::vector<Array> a, b;
        for (int i = 0; i < 6; ++i) a.push_back(random_normal(rng, {4}));
        for (int i = 0; i < 9; ++i) b.push_back(random_normal(rng, {4}));
        CHECK(std::abs(mmd(a, b, kernel) - mmd(b, a, kernel)) < 1e-12);
    }
    SUBCASE("singleton closed form with one unit-bandwidth kernel") {
        // median pairwise distance of {0, 1} is 1, so sigma = 1 exactly
        KernelSpec single;
        single.bandwidth_scales = {1.0};
        std::vector<Array> n{Array({1}, {0.0})};
        std::vector<Array> m{Array({1}, {1.0})};
        const double expected = 2.0 - 2.0 * std::exp(-0.5);
        CHECK(mmd(n, m, single) == doctest::Approx(expected).epsilon(1e-14));
    }
    SUBCASE("agrees with brute force on all sizes up to 16") {
        Rng rng(4);
        for (std::size_t nn = 1; nn <= 16; nn += 3) {
            for (std::size_t mm = 1; mm <= 16; mm += 4) {
                std::vector<Array> n, m;
                for (std::size_t i = 0; i < nn; ++i) n.push_back(random_normal(rng, {6}));
                for (std::size_t i = 0; i < mm; ++i) m.push_back(random_normal(rng, {6}));
                const double fast = mmd(n, m, kernel);
                const double slow = mmd_bruteforce(n, m, kernel.bandwidth_scales);
                CHECK(std::abs(fast - slow) < 1e-10);
                CHECK(fast >= -1e-12);  // PD kernel V-statistic
            }
        }
    }
    SUBCASE("separates shifted distributions at n = 256") {
        Rng rng(5);
        std::vector<Array> base, same, shifted;
        for (int i = 0; i < 256; ++i) {
            base.push_back(random_normal(rng, {4}));
            same.push_back(random_normal(rng, {4}));
            Array s = random_normal(rng, {4});
            for (std::size_t k = 0; k < s.size(); ++k) s[k] += 3.0;
            shifted.push_back(s);
        }
        CHECK(mmd(base, shifted, kernel) > mmd(base, same, kernel));
    }
    SUBCASE("empty set is rejected") {
        std::vector<Array> some{Array({2})};
        std::vector<Array> none;
        CHECK_THROWS_AS(mmd(none, some, kernel), ValidationError);
        CHECK_THROWS_AS(mmd(some, none, kernel), ValidationError);
    }
    SUBCASE("dimension mismatch is rejected") {
        std::vector<Array> a{Array({2})};
        std::vector<Array> b{Array({3})};
        CHECK_THROWS_AS(mmd(a, b, kernel), ValidationError);
    }
}

TEST_CASE("tape mmd matches the raw estimator and differentiates") {
    KernelSpec kernel;
    Rng rng(6);
    std::vector<Array> n_raw, m_raw;
    for (int i = 0; i < 5; ++i) {
        n_raw.push_back(random_normal(rng, {2, 3}));
        m_raw.push_back(random_normal(rng, {2, 3}));
    }

    Tape tape;
    std::vector<Value> n_vals, m_vals;
    for (const Array& a : n_raw) n_vals.push_back(tape.constant(a));
    ParamMap m_params;
    for (std::size_t i = 0; i < m_raw.size(); ++i) {
        m_params.emplace("m" + std::to_string(i), m_raw[i]);
    }
    TapeParams bound = bind_params(tape, m_params, true);
    for (auto& [name, v] : bound) m_vals.push_back(v);

    Value result = mmd_on_tape(tape, n_vals, m_vals, kernel);
    CHECK(std::abs(result.array()[0] - mmd(n_raw, m_raw, kernel)) < 1e-10);

    // gradient against finite differences; the bandwidth is pinned because
    // the median heuristic is constant w.r.t. gradients by definition, and a
    // perturbed median would leak into the FD estimate
    KernelSpec pinned = kernel;
    pinned.fixed_bandwidth = 1.5;
    testutil::GradCheck check;
    const double err = check.run(m_params, [&](Tape& t, const TapeParams& p) {
        std::vector<Value> n2, m2;
        for (const Array& a : n_raw) n2.push_back(t.constant(a));
        for (auto& [name, v] : p) m2.push_back(v);
        return mmd_on_tape(t, n2, m2, pinned);
    });
    CHECK(err < 1e-4);
}

TEST_CASE("ada-mmd combination") {
    Rng rng(7);
    std::vector<Array> eps_raw, hat_raw;
    for (int i = 0; i < 4; ++i) {
        eps_raw.push_back(random_normal(rng, {2, 3}));
        hat_raw.push_back(random_normal(rng, {2, 3}));
    }

    auto run_with_logit = [&](double logit, bool mmd_on) {
        Tape tape;
        std::vector<Value> e, h;
        for (const Array& a : eps_raw) e.push_back(tape.constant(a));
        for (const Array& a : hat_raw) h.push_back(tape.leaf(a, true));
        Value logit_v = tape.leaf(Array::scalar(logit), true);
        AdaMmdOptions opts;
        opts.mmd_enabled = mmd_on;
        return ada_mmd_loss(tape, e, h, logit_v, opts).breakdown;
    };

    SUBCASE("omega endpoints reproduce the component losses") {
        LossBreakdown low = run_with_logit(-30.0, true);
        CHECK(std::abs(low.l_total - low.l_noise) < 1e-12);
        LossBreakdown high = run_with_logit(30.0, true);
        CHECK(std::abs(high.l_total - high.l_mmd) < 1e-12);
    }
    SUBCASE("logit zero blends evenly") {
        LossBreakdown mid = run_with_logit(0.0, true);
        CHECK(mid.omega == doctest::Approx(0.5));
        CHECK(mid.l_total ==
              doctest::Approx(0.5 * mid.l_noise + 0.5 * mid.l_mmd).epsilon(1e-12));
    }
    SUBCASE("breakdown identity holds") {
        LossBreakdown b = run_with_logit(-1.3, true);
        CHECK(std::abs(b.l_total - ((1.0 - b.omega) * b.l_noise + b.omega * b.l_mmd)) <= 1e-12);
    }
    SUBCASE("mmd disabled reduces to the noise loss") {
        LossBreakdown b = run_with_logit(0.7, false);
        CHECK(b.l_total == b.l_noise);
        CHECK(b.l_mmd == 0.0);
        CHECK(b.omega == 0.0);
    }
    SUBCASE("fixed omega pins the blend") {
        Tape tape;
        std::vector<Value> e, h;
        for (const Array& a : eps_raw) e.push_back(tape.constant(a));
        for (const Array& a : hat_raw) h.push_back(tape.leaf(a, true));
        Value logit_v = tape.leaf(Array::scalar(5.0), true);  // would give omega ~ 1
        AdaMmdOptions opts;
        opts.fixed_omega = 0.25;
        LossBreakdown b = ada_mmd_loss(tape, e, h, logit_v, opts).breakdown;
        CHECK(b.omega == 0.25);
        CHECK(b.l_total == doctest::Approx(0.75 * b.l_noise + 0.25 * b.l_mmd).epsilon(1e-12));
    }
}

TEST_CASE("gradients flow to eps_hat and the omega logit") {
    Rng rng(8);
    std::vector<Array> eps_raw;
    for (int i = 0; i < 3; ++i) eps_raw.push_back(random_normal(rng, {4}));

    ParamMap inputs;
    for (int i = 0; i < 3; ++i) {
        inputs.emplace("h" + std::to_string(i), random_normal(rng, {4}));
    }
    inputs.emplace("omega_logit", Array::scalar(-0.4));

    testutil::GradCheck check;
    const double err = check.run(inputs, [&](Tape& t, const TapeParams& p) {
        std::vector<Value> e, h;
        for (const Array& a : eps_raw) e.push_back(t.constant(a));
        for (int i = 0; i < 3; ++i) h.push_back(p.at("h" + std::to_string(i)));
        AdaMmdOptions opts;
        opts.kernel.fixed_bandwidth = 1.2;  // median heuristic is constant w.r.t. grads
        return ada_mmd_loss(t, e, h, p.at("omega_logit"), opts).total;
    });
    CHECK(err < 1e-4);
}
