#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>

#include "diffmts/dataset.hpp"
#include "diffmts/metrics.hpp"

using namespace diffmts;

namespace {

struct TempFile {
    std::string path;
    explicit TempFile(const std::string& name) : path("/tmp/diffmts_test_" + name) {}
    ~TempFile() { std::remove(path.c_str()); }
};

// two units with known lengths, 26 columns each row
void write_fixture(const std::string& path, std::size_t len1 = 5, std::size_t len2 = 3) {
    std::ofstream out(path);
    auto row = [&out](int unit, std::size_t cycle) {
        out << unit << ' ' << cycle << " 0.1 0.2 100";
        for (int s = 1; s <= 21; ++s) out << ' ' << (0.5 * s + 0.01 * static_cast<double>(cycle));
        out << '\n';
    };
    for (std::size_t c = 1; c <= len1; ++c) row(1, c);
    for (std::size_t c = 1; c <= len2; ++c) row(2, c);
}

}  // namespace

TEST_CASE("load_cmapss") {
    SUBCASE("drops the constant sensors, keeping 14 channels") {
        TempFile f("fixture1.txt");
        write_fixture(f.path);
        TrajectorySet set = load_cmapss(f.path);
        CHECK(set.channel_names.size() == 14);
        CHECK(set.channel_names.front() == "s2");
        CHECK(set.channel_names.back() == "s21");
        REQUIRE(set.units.size() == 2);
        CHECK(set.units[0].readings.shape() == Shape{14, 5});
        CHECK(set.units[1].readings.shape() == Shape{14, 3});
    }
    SUBCASE("comma-delimited rows parse identically") {
        TempFile f("fixture2.csv");
        {
            std::ofstream out(f.path);
            out << "1,1,0.1,0.2,100";
            for (int s = 1; s <= 21; ++s) out << ',' << s;
            out << "\n";
        }
        TrajectorySet set = load_cmapss(f.path);
        REQUIRE(set.units.size() == 1);
        CHECK(set.units[0].readings.at(0, 0) == 2.0);  // s2 is the first kept channel
    }
    SUBCASE("empty file is a format error") {
        TempFile f("empty.txt");
        std::ofstream(f.path).close();
        CHECK_THROWS_AS(load_cmapss(f.path), FormatError);
    }
    SUBCASE("wrong column count names the line") {
        TempFile f("badcols.txt");
        {
            std::ofstream out(f.path);
            out << "1 1 0.1 0.2 100 1 2 3\n";
        }
        try {
            load_cmapss(f.path);
            FAIL("expected FormatError");
        } catch (const FormatError& e) {
            CHECK(std::string(e.what()).find("line 1") != std::string::npos);
        }
    }
    SUBCASE("non-numeric cell is a parse error") {
        TempFile f("badcell.txt");
        {
            std::ofstream out(f.path);
            out << "1 1 0.1 xyz 100";
            for (int s = 1; s <= 21; ++s) out << " 1";
            out << "\n";
        }
        CHECK_THROWS_AS(load_cmapss(f.path), ParseError);
    }
    SUBCASE("missing file is an io error") {
        CHECK_THROWS_AS(load_cmapss("/nonexistent/nope.txt"), IoError);
    }
}

TEST_CASE("save/load round trip through the text contract") {
    SynthConfig cfg;
    cfg.units = 3;
    cfg.channels = 14;
    cfg.max_cycles = 40;
    cfg.seed = 5;
    TrajectorySet gen = synth_degradation(cfg);
    TempFile f("roundtrip.txt");
    save_cmapss(gen, f.path);
    TrajectorySet back = load_cmapss(f.path);
    REQUIRE(back.units.size() == gen.units.size());
    for (std::size_t u = 0; u < gen.units.size(); ++u) {
        REQUIRE(back.units[u].readings.shape() == gen.units[u].readings.shape());
        for (std::size_t i = 0; i < gen.units[u].readings.size(); ++i) {
            // text serialization is %.6f fixed
            CHECK(back.units[u].readings[i] ==
                  doctest::Approx(gen.units[u].readings[i]).epsilon(1e-5));
        }
    }
}

TEST_CASE("compute_condition") {
    Trajectory unit;
    unit.unit_id = 1;
    unit.readings = Array({1, 200});
    SUBCASE("cap plateau and linear tail") {
        std::vector<double> cond = compute_condition(unit, 125.0);
        CHECK(cond.back() == 0.0);                               // final cycle
        CHECK(cond.front() == 1.0);                              // remaining life >= cap
        CHECK(cond[99] == doctest::Approx(100.0 / 125.0));       // cycle 100 of 200
        for (std::size_t i = 1; i < cond.size(); ++i) CHECK(cond[i] <= cond[i - 1]);
    }
    SUBCASE("bad cap") {
        CHECK_THROWS_AS(compute_condition(unit, 0.0), ConfigError);
    }
}

TEST_CASE("windowing") {
    TempFile f("window.txt");
    write_fixture(f.path, 100, 10);
    TrajectorySet set = load_cmapss(f.path);

    SUBCASE("count arithmetic and short units") {
        WindowSet w = window(set, 24, 1, 125.0);
        CHECK(w.count() == 77);  // 100 - 24 + 1; the 10-cycle unit contributes nothing
        for (const Provenance& p : w.provenance) CHECK(p.unit_id == 1);
    }
    SUBCASE("window condition comes from the final cycle") {
        WindowSet w = window(set, 24, 1, 50.0);
        // first window ends at cycle 24 of a 100-cycle unit: remaining 76 -> capped
        CHECK(w.conditions.front() == 1.0);
        CHECK(w.conditions.back() == 0.0);  // last window ends at the final cycle
        // enumerate expected end cycles
        for (std::size_t i = 0; i < w.count(); ++i) {
            CHECK(w.provenance[i].end_cycle == 24 + i);
        }
    }
    SUBCASE("supported paper lengths") {
        for (std::size_t len : {std::size_t{24}, std::size_t{48}, std::size_t{96}}) {
            WindowSet w = window(set, len, 1, 125.0);
            CHECK(w.count() == 100 - len + 1);
            CHECK(w.windows.front().shape() == Shape{14, len});
        }
    }
    SUBCASE("stride subsamples") {
        WindowSet w = window(set, 24, 10, 125.0);
        CHECK(w.count() == 8);  // ends at 24, 34, ..., 94
    }
    SUBCASE("no unit long enough") {
        CHECK_THROWS_AS(window(set, 101, 1, 125.0), ValidationError);
    }
    SUBCASE("windows never cross unit boundaries") {
        TempFile g("twounits.txt");
        write_fixture(g.path, 30, 30);
        WindowSet w = window(load_cmapss(g.path), 24, 1, 125.0);
        CHECK(w.count() == 14);  // 7 per unit
        for (const Provenance& p : w.provenance) {
            CHECK(p.end_cycle >= 24);
            CHECK(p.end_cycle <= 30);
        }
    }
}

TEST_CASE("normalization") {
    WindowSet w;
    w.channel_names = {"a", "b"};
    w.windows.push_back(Array({2, 2}, {0.0, 10.0, 5.0, 5.0}));  // channel b constant
    w.windows.push_back(Array({2, 2}, {5.0, 2.5, 5.0, 5.0}));
    w.conditions = {0.5, 0.25};
    w.provenance = {{1, 2}, {1, 3}};

    NormStats stats = normalize(w);
    SUBCASE("midpoint maps to zero, range to [-1, 1]") {
        CHECK(w.windows[0].at(0, 0) == doctest::Approx(-1.0));
        CHECK(w.windows[0].at(0, 1) == doctest::Approx(1.0));
        CHECK(w.windows[1].at(0, 0) == doctest::Approx(0.0));  // 5 is the midpoint of [0,10]
    }
    SUBCASE("constant channel maps to zero") {
        CHECK(w.windows[0].at(1, 0) == 0.0);
        CHECK(w.windows[1].at(1, 1) == 0.0);
    }
    SUBCASE("round trip restores original values") {
        Array back = denormalize(w.windows[0], stats);
        CHECK(back.at(0, 0) == doctest::Approx(0.0).epsilon(1e-9));
        CHECK(back.at(0, 1) == doctest::Approx(10.0).epsilon(1e-9));
        CHECK(back.at(1, 0) == doctest::Approx(5.0).epsilon(1e-9));
    }
    SUBCASE("held-out data may leave [-1, 1]") {
        WindowSet held;
        held.channel_names = w.channel_names;
        held.windows.push_back(Array({2, 2}, {20.0, -10.0, 5.0, 5.0}));
        held.conditions = {0.1};
        held.provenance = {{2, 2}};
        apply_normalize(held, stats);
        CHECK(held.windows[0].at(0, 0) > 1.0);
        CHECK(held.windows[0].at(0, 1) < -1.0);
    }
}

TEST_CASE("synthetic degradation generator") {
    SUBCASE("same seed reproduces trajectories bitwise") {
        SynthConfig cfg;
        cfg.units = 4;
        cfg.channels = 3;
        cfg.max_cycles = 50;
        cfg.seed = 9;
        TrajectorySet a = synth_degradation(cfg);
        TrajectorySet b = synth_degradation(cfg);
        REQUIRE(a.units.size() == b.units.size());
        for (std::size_t u = 0; u < a.units.size(); ++u) {
            REQUIRE(a.units[u].readings.size() == b.units[u].readings.size());
            for (std::size_t i = 0; i < a.units[u].readings.size(); ++i) {
                CHECK(a.units[u].readings[i] == b.units[u].readings[i]);
            }
        }
    }
    SUBCASE("noise and seasonality off leaves monotone trend curves") {
        SynthConfig cfg;
        cfg.units = 5;
        cfg.channels = 4;
        cfg.max_cycles = 60;
        cfg.noise_std = 0.0;
        cfg.seasonal_amp = 0.0;
        cfg.seed = 10;
        TrajectorySet set = synth_degradation(cfg);
        for (const Trajectory& unit : set.units) {
            for (std::size_t c = 0; c < 4; ++c) {
                bool increasing = true, decreasing = true;
                for (std::size_t t = 1; t < unit.cycles(); ++t) {
                    if (unit.readings.at(c, t) < unit.readings.at(c, t - 1)) increasing = false;
                    if (unit.readings.at(c, t) > unit.readings.at(c, t - 1)) decreasing = false;
                }
                CHECK((increasing || decreasing));
            }
        }
    }
    SUBCASE("channel readings correlate with the condition") {
        SynthConfig cfg;
        cfg.units = 50;
        cfg.channels = 6;
        cfg.max_cycles = 120;
        cfg.seed = 11;
        TrajectorySet set = synth_degradation(cfg);
        double mean_abs_rho = 0.0;
        std::size_t count = 0;
        for (const Trajectory& unit : set.units) {
            const std::vector<double> cond = compute_condition(unit, 125.0);
            for (std::size_t c = 0; c < cfg.channels; ++c) {
                std::vector<double> series(unit.cycles());
                for (std::size_t t = 0; t < unit.cycles(); ++t) series[t] = unit.readings.at(c, t);
                mean_abs_rho += std::abs(pearson_correlation(series, cond));
                ++count;
            }
        }
        mean_abs_rho /= static_cast<double>(count);
        CHECK(mean_abs_rho > 0.5);
    }
    SUBCASE("bad config") {
        SynthConfig cfg;
        cfg.units = 0;
        CHECK_THROWS_AS(synth_degradation(cfg), ConfigError);
    }
}

TEST_CASE("mean-coded corpus ties channel means to conditions exactly") {
    WindowSet w = make_mean_coded_windows(16, 3, 12, 0.3, 21);
    REQUIRE(w.count() == 16);
    for (std::size_t i = 0; i < w.count(); ++i) {
        for (std::size_t c = 0; c < 3; ++c) {
            double mean = 0.0;
            for (std::size_t l = 0; l < 12; ++l) mean += w.windows[i].at(c, l);
            mean /= 12.0;
            CHECK(mean == doctest::Approx(w.conditions[i]).epsilon(1e-12));
        }
        CHECK(w.conditions[i] >= 0.0);
        CHECK(w.conditions[i] <= 1.0);
    }
}
