#include <doctest.h>

#include <cmath>
#include <random>

#include "meterbench/blend.hpp"
#include "meterbench/error.hpp"
#include "meterbench/metrics.hpp"

using namespace meterbench;

namespace {

BlendSpec spec_of(std::vector<double> w, double p) {
    BlendSpec s;
    s.overall.weights = std::move(w);
    s.overall.p = p;
    return s;
}

} // namespace

TEST_CASE("blend analytic cases") {
    // arithmetic mean
    CHECK(blend({{2.0}, {4.0}}, spec_of({1, 1}, 1.0))[0] == doctest::Approx(3.0));
    // geometric mean at p = 0
    CHECK(blend({{1.0}, {4.0}}, spec_of({1, 1}, 0.0))[0] == doctest::Approx(2.0));
    // weighted mean
    CHECK(blend({{0.0}, {4.0}}, spec_of({1, 3}, 1.0))[0] == doctest::Approx(3.0));
}

TEST_CASE("blend with a single member is the identity for any p") {
    const std::vector<double> x{0.0, 1.5, 100.0, 7.25};
    for (const double p : {-2.0, -0.5, 0.0, 0.5, 1.0, 3.0}) {
        const auto out = blend({x}, spec_of({1.0}, p));
        for (std::size_t i = 0; i < x.size(); ++i)
            CHECK(out[i] == doctest::Approx(x[i]).epsilon(1e-12));
    }
}

TEST_CASE("blend: zero with non-positive p collapses the row to zero") {
    CHECK(blend({{0.0}, {4.0}}, spec_of({1, 1}, -1.0))[0] == 0.0);
    CHECK(blend({{0.0}, {4.0}}, spec_of({1, 1}, 0.0))[0] == 0.0);
    // a zero-weight member's zero does not
    CHECK(blend({{0.0}, {4.0}}, spec_of({0, 1}, -1.0))[0] == doctest::Approx(4.0));
}

TEST_CASE("blend betweenness and monotonicity in p") {
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> val(0.1, 100.0);
    std::uniform_real_distribution<double> wdist(0.05, 1.0);
    for (int rep = 0; rep < 30; ++rep) {
        std::vector<std::vector<double>> members(3, std::vector<double>(5));
        for (auto& m : members)
            for (auto& v : m) v = val(gen);
        std::vector<double> w{wdist(gen), wdist(gen), wdist(gen)};
        std::vector<double> prev;
        for (const double p : {-5.0, -2.0, -0.5, 0.0, 0.5, 1.0, 2.0, 5.0}) {
            const auto out = blend(members, spec_of(w, p));
            for (std::size_t i = 0; i < out.size(); ++i) {
                double lo = members[0][i], hi = members[0][i];
                for (const auto& m : members) {
                    lo = std::min(lo, m[i]);
                    hi = std::max(hi, m[i]);
                }
                CHECK(out[i] >= lo - 1e-9);
                CHECK(out[i] <= hi + 1e-9);
                if (!prev.empty()) CHECK(out[i] >= prev[i] - 1e-9); // power-mean inequality
            }
            prev = out;
        }
    }
}

TEST_CASE("blend routes rows through per-meter weight tables") {
    BlendSpec spec = spec_of({1, 0}, 1.0);
    spec.per_meter[1] = {{0, 1}, 1.0};
    const std::vector<int> meters{0, 1};
    const auto out = blend({{10.0, 10.0}, {20.0, 20.0}}, spec, &meters);
    CHECK(out[0] == doctest::Approx(10.0)); // meter 0: overall weights pick member A
    CHECK(out[1] == doctest::Approx(20.0)); // meter 1 table picks member B
}

TEST_CASE("blend validation errors") {
    CHECK_THROWS_AS(blend({}, spec_of({1}, 1.0)), ConfigError);
    CHECK_THROWS_AS(blend({{1.0}, {1.0, 2.0}}, spec_of({1, 1}, 1.0)), ConfigError);
    CHECK_THROWS_AS(blend({{1.0}}, spec_of({0.0}, 1.0)), ConfigError);    // all-zero weights
    CHECK_THROWS_AS(blend({{1.0}}, spec_of({-1.0}, 1.0)), ConfigError);   // negative weight
    CHECK_THROWS_AS(blend({{1.0}}, spec_of({1.0}, 9.0)), ConfigError);    // p outside [-5, 5]
    CHECK_THROWS_AS(blend({{-1.0}}, spec_of({1.0}, 1.0)), DataError);     // negative prediction
}

TEST_CASE("optimize: single member gets weight 1 and reproduces it") {
    const std::vector<double> member{1.0, 2.0, 3.0};
    const std::vector<double> actual{1.1, 2.2, 2.9};
    const auto spec = optimize_weights({member}, actual, {});
    REQUIRE(spec.overall.weights.size() == 1);
    CHECK(spec.overall.weights[0] == doctest::Approx(1.0));
    const auto out = blend({member}, spec);
    for (std::size_t i = 0; i < member.size(); ++i) CHECK(out[i] == doctest::Approx(member[i]));
}

TEST_CASE("optimize: a perfect member takes all the weight") {
    const std::vector<double> actual{1.0, 5.0, 9.0, 2.0};
    const std::vector<double> noisy{1.5, 4.0, 10.0, 2.5};
    const auto spec = optimize_weights({actual, noisy}, actual, {});
    CHECK(spec.overall.weights[0] == doctest::Approx(1.0));
    CHECK(spec.overall.weights[1] == doctest::Approx(0.0));
    CHECK(rmsle(blend({actual, noisy}, spec), actual) <= 1e-12);
}

TEST_CASE("optimize: never worse than the best single member (random member sets)") {
    std::mt19937_64 gen(9);
    std::uniform_real_distribution<double> val(0.5, 50.0);
    std::normal_distribution<double> noise(0.0, 0.2);
    for (int rep = 0; rep < 20; ++rep) {
        const std::size_t n = 60;
        std::vector<double> actual(n);
        for (auto& v : actual) v = val(gen);
        std::uniform_int_distribution<std::size_t> mdist(1, 4);
        const std::size_t n_members = mdist(gen);
        std::vector<std::vector<double>> members(n_members, std::vector<double>(n));
        for (auto& m : members)
            for (std::size_t i = 0; i < n; ++i)
                m[i] = std::max(0.0, actual[i] * std::exp(noise(gen)));
        const auto spec = optimize_weights(members, actual, {});
        const double blended = rmsle(blend(members, spec), actual);
        for (const auto& m : members) CHECK(blended <= rmsle(m, actual) + 1e-12);
    }
}

TEST_CASE("optimize: two unbiased noisy members blend at least as well as the best one") {
    std::mt19937_64 gen(13);
    std::uniform_real_distribution<double> val(1.0, 100.0);
    std::normal_distribution<double> noise(0.0, 0.3);
    const std::size_t n = 500;
    std::vector<double> actual(n);
    std::vector<std::vector<double>> members(2, std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i) {
        actual[i] = val(gen);
        members[0][i] = actual[i] * std::exp(noise(gen));
        members[1][i] = actual[i] * std::exp(noise(gen));
    }
    const auto spec = optimize_weights(members, actual, {});
    const double blended = rmsle(blend(members, spec), actual);
    const double best_single = std::min(rmsle(members[0], actual), rmsle(members[1], actual));
    CHECK(blended <= best_single + 1e-12);
    // independent noise means a true interior blend wins
    CHECK(spec.overall.weights[0] > 0.0);
    CHECK(spec.overall.weights[1] > 0.0);
}

TEST_CASE("optimize: per-meter tables are fit on their own rows") {
    // meter 0: member A perfect; meter 1: member B perfect
    std::vector<double> actual, a, b;
    std::vector<int> meters;
    for (int i = 0; i < 40; ++i) {
        const double v = 10.0 + i;
        actual.push_back(v);
        meters.push_back(i % 2);
        a.push_back(i % 2 == 0 ? v : v * 3.0);
        b.push_back(i % 2 == 1 ? v : v * 3.0);
    }
    OptimizeOptions opt;
    opt.per_meter = true;
    const auto spec = optimize_weights({a, b}, actual, opt, &meters);
    REQUIRE(spec.per_meter.count(0));
    REQUIRE(spec.per_meter.count(1));
    CHECK(spec.per_meter.at(0).weights[0] == doctest::Approx(1.0));
    CHECK(spec.per_meter.at(1).weights[1] == doctest::Approx(1.0));
    const auto out = blend({a, b}, spec, &meters);
    CHECK(rmsle(out, actual) <= 1e-12);
}

TEST_CASE("optimize: empty validation set is an error") {
    CHECK_THROWS_AS(optimize_weights({{}}, {}, {}), DataError);
}

TEST_CASE("optimize: deterministic tie-break prefers lexicographically smaller weights then p") {
    // all-ones members make every candidate score identically (pow and log
    // are exact at 1), so only the tie-break decides
    const std::vector<double> ones{1.0, 1.0, 1.0};
    const auto spec = optimize_weights({ones, ones}, ones, {});
    CHECK(spec.overall.weights[0] == 0.0);
    CHECK(spec.overall.weights[1] == 1.0);
    CHECK(spec.overall.p == 0.0); // smallest p in the default grid
}
