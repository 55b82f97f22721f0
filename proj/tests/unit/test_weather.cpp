#include <doctest.h>

#include <cmath>
#include <random>

#include "meterbench/error.hpp"
#include "meterbench/weather.hpp"

using namespace meterbench;

namespace {

WeatherRecord at(int site, HourStamp ts, std::optional<double> air) {
    WeatherRecord r;
    r.site_id = site;
    r.ts = ts;
    r.air_temperature = air;
    return r;
}

constexpr HourStamp kStart = 403224; // 2016-01-01 00:00

} // namespace

TEST_CASE("impute: linear midpoint for a short gap") {
    std::vector<WeatherRecord> w{at(0, kStart, 10.0), at(0, kStart + 1, std::nullopt),
                                 at(0, kStart + 2, 12.0)};
    const auto grid = impute_weather(w, 1);
    CHECK(grid.at(0, kAirTemperature, kStart + 1) == doctest::Approx(11.0));
    CHECK(grid.sites.at(0).imputed[kAirTemperature][1] == 1);
    CHECK(grid.imputed_cells() == 1); // only vars with observations count
}

TEST_CASE("impute: no missing values is the identity with zero flags") {
    std::vector<WeatherRecord> w;
    for (int h = 0; h < 48; ++h) w.push_back(at(0, kStart + h, 10.0 + h));
    const auto grid = impute_weather(w, 6);
    CHECK(grid.imputed_cells() == 0);
    for (int h = 0; h < 48; ++h)
        CHECK(grid.at(0, kAirTemperature, kStart + h) == doctest::Approx(10.0 + h));
}

TEST_CASE("impute: long gap filled with hour-of-day means (brute-force oracle)") {
    std::mt19937_64 gen(3);
    std::uniform_real_distribution<double> noise(-2.0, 2.0);
    std::vector<WeatherRecord> w;
    const int days = 60;
    const int gap_day_lo = 20, gap_day_hi = 50; // 30-day gap
    std::vector<double> observed[24];
    for (int d = 0; d < days; ++d) {
        for (int h = 0; h < 24; ++h) {
            const HourStamp ts = kStart + d * 24 + h;
            const double v = 10.0 + 8.0 * std::cos((h - 14) * 0.26) + noise(gen);
            if (d >= gap_day_lo && d < gap_day_hi) {
                w.push_back(at(0, ts, std::nullopt));
            } else {
                w.push_back(at(0, ts, v));
                observed[h].push_back(v);
            }
        }
    }
    const auto grid = impute_weather(w, 6);
    for (const int h : {0, 7, 14, 23}) {
        double mean = 0;
        for (const double v : observed[h]) mean += v;
        mean /= static_cast<double>(observed[h].size());
        const HourStamp probe = kStart + (gap_day_lo + 10) * 24 + h;
        CHECK(grid.at(0, kAirTemperature, probe) == doctest::Approx(mean).epsilon(1e-12));
    }
    // flag count equals the missing-cell count for the variable
    std::size_t air_flags = 0;
    for (const auto f : grid.sites.at(0).imputed[kAirTemperature]) air_flags += f;
    CHECK(air_flags == 24 * (gap_day_hi - gap_day_lo));
}

TEST_CASE("impute: variable with no observations stays unavailable; empty input fatal") {
    std::vector<WeatherRecord> w{at(0, kStart, 10.0), at(0, kStart + 1, 11.0)};
    const auto grid = impute_weather(w, 6);
    CHECK_FALSE(grid.sites.at(0).available[kWindSpeed]);
    CHECK(std::isnan(grid.at(0, kWindSpeed, kStart)));
    CHECK_THROWS_AS(impute_weather({}, 6), DataError);
}

TEST_CASE("impute: grid covers the union range across sites") {
    std::vector<WeatherRecord> w{at(0, kStart, 1.0), at(1, kStart + 100, 2.0)};
    const auto grid = impute_weather(w, 6);
    CHECK(grid.start == kStart);
    CHECK(grid.n_hours == 101);
    // site 0's trailing edge is filled from its own profile (here: its only value)
    CHECK(grid.at(0, kAirTemperature, kStart + 100) == doctest::Approx(1.0));
}

namespace {

std::vector<std::pair<HourStamp, double>> sinusoid(int days, int peak_hour, double noise_sd,
                                                   std::uint64_t seed) {
    std::mt19937_64 gen(seed);
    std::normal_distribution<double> noise(0.0, noise_sd);
    std::vector<std::pair<HourStamp, double>> out;
    for (int d = 0; d < days; ++d)
        for (int h = 0; h < 24; ++h)
            out.emplace_back(kStart + d * 24 + h,
                             15.0 + 6.0 * std::cos((h - peak_hour) * 2.0 * 3.141592653589793 / 24.0) +
                                 noise(gen));
    return out;
}

} // namespace

TEST_CASE("timezone offset: analytic shifts") {
    CHECK(estimate_timezone_offset(sinusoid(20, 20, 0.0, 1)) == -6);
    CHECK(estimate_timezone_offset(sinusoid(20, 14, 0.0, 1)) == 0);
    CHECK(estimate_timezone_offset(sinusoid(20, 2, 0.0, 1)) == -12);
}

TEST_CASE("timezone offset: insufficient data yields an error value distinct from 0") {
    CHECK_FALSE(estimate_timezone_offset(sinusoid(13, 14, 0.0, 1)).has_value());
    CHECK(estimate_timezone_offset(sinusoid(14, 14, 0.0, 1)).has_value());
}

TEST_CASE("timezone offset: shift-equivariance") {
    const auto base = sinusoid(20, 14, 0.5, 5);
    const auto est0 = estimate_timezone_offset(base);
    REQUIRE(est0.has_value());
    for (const int k : {1, 5, 13, 23}) {
        auto shifted = base;
        for (auto& [ts, v] : shifted) ts += k;
        const auto est = estimate_timezone_offset(shifted);
        REQUIRE(est.has_value());
        CHECK(*est == canonicalize_offset(*est0 - k));
    }
}

TEST_CASE("timezone offset: full sweep recovered under 0.5 degC noise") {
    for (int target = -12; target <= 11; ++target) {
        // peak moved so that adding `target` brings it back to 14:00
        const int peak = ((14 - target) % 24 + 24) % 24;
        const auto est = estimate_timezone_offset(sinusoid(20, peak, 0.5, 100 + target));
        REQUIRE(est.has_value());
        CHECK(*est == target);
    }
}

TEST_CASE("canonicalize_offset maps into [-12, 11]") {
    CHECK(canonicalize_offset(12) == -12);
    CHECK(canonicalize_offset(13) == -11);
    CHECK(canonicalize_offset(-13) == 11);
    CHECK(canonicalize_offset(0) == 0);
    CHECK(canonicalize_offset(11) == 11);
    CHECK(canonicalize_offset(24) == 0);
}

TEST_CASE("apply_timezone_offset shifts one site only") {
    std::vector<WeatherRecord> w{at(0, kStart, 1.0), at(1, kStart, 2.0)};
    apply_timezone_offset(w, 0, 3);
    bool site0_shifted = false, site1_kept = false;
    for (const auto& r : w) {
        if (r.site_id == 0 && r.ts == kStart + 3) site0_shifted = true;
        if (r.site_id == 1 && r.ts == kStart) site1_kept = true;
    }
    CHECK(site0_shifted);
    CHECK(site1_kept);
}
