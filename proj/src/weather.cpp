#include "meterbench/weather.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "meterbench/error.hpp"

namespace meterbench {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kTau = 6.283185307179586;
} // namespace

const char* weather_var_name(int var) {
    switch (var) {
        case kAirTemperature: return "air_temperature";
        case kCloudCoverage: return "cloud_coverage";
        case kDewTemperature: return "dew_temperature";
        case kPrecipDepth1Hr: return "precip_depth_1_hr";
        case kSeaLevelPressure: return "sea_level_pressure";
        case kWindDirection: return "wind_direction";
        case kWindSpeed: return "wind_speed";
    }
    return "?";
}

double WeatherGrid::at(int site_id, int var, HourStamp ts) const {
    const auto it = sites.find(site_id);
    if (it == sites.end() || !covers(ts)) return kNaN;
    return it->second.values[static_cast<std::size_t>(var)][static_cast<std::size_t>(ts - start)];
}

std::size_t WeatherGrid::imputed_cells() const {
    std::size_t n = 0;
    for (const auto& [id, s] : sites)
        for (const auto& flags : s.imputed)
            for (const auto f : flags) n += f;
    return n;
}

std::size_t WeatherGrid::missing_input_cells() const {
    // every imputed cell was missing; unavailable variables stay missing
    std::size_t n = imputed_cells();
    for (const auto& [id, s] : sites)
        for (int v = 0; v < kNumWeatherVars; ++v)
            if (!s.available[static_cast<std::size_t>(v)]) n += n_hours;
    return n;
}

namespace {

std::optional<double> record_var(const WeatherRecord& r, int var) {
    switch (var) {
        case kAirTemperature: return r.air_temperature;
        case kCloudCoverage: return r.cloud_coverage;
        case kDewTemperature: return r.dew_temperature;
        case kPrecipDepth1Hr: return r.precip_depth_1_hr;
        case kSeaLevelPressure: return r.sea_level_pressure;
        case kWindDirection: return r.wind_direction;
        case kWindSpeed: return r.wind_speed;
    }
    return std::nullopt;
}

// Fills NaN runs in `v`. Interior gaps <= max_gap_linear interpolate
// linearly between their neighbors; everything else uses the hour-of-day
// mean of the observed values.
void fill_series(std::vector<double>& v, std::vector<std::uint8_t>& imputed, HourStamp start,
                 int max_gap_linear) {
    const std::size_t n = v.size();
    double hour_sum[24] = {0};
    std::size_t hour_n[24] = {0};
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isnan(v[i])) {
            const int h = hour_of_day(start + static_cast<HourStamp>(i));
            hour_sum[h] += v[i];
            hour_n[h] += 1;
        }
    }
    double global_sum = 0;
    std::size_t global_n = 0;
    for (int h = 0; h < 24; ++h) {
        global_sum += hour_sum[h];
        global_n += hour_n[h];
    }
    const double global_mean = global_sum / static_cast<double>(global_n);
    auto profile = [&](std::size_t i) {
        const int h = hour_of_day(start + static_cast<HourStamp>(i));
        return hour_n[h] > 0 ? hour_sum[h] / static_cast<double>(hour_n[h]) : global_mean;
    };

    std::size_t i = 0;
    while (i < n) {
        if (!std::isnan(v[i])) {
            ++i;
            continue;
        }
        std::size_t j = i;
        while (j < n && std::isnan(v[j])) ++j;
        const bool has_left = i > 0;
        const bool has_right = j < n;
        const std::size_t gap = j - i;
        if (has_left && has_right && gap <= static_cast<std::size_t>(max_gap_linear)) {
            const double left = v[i - 1], right = v[j];
            const double denom = static_cast<double>(gap + 1);
            for (std::size_t k = i; k < j; ++k) {
                const double t = static_cast<double>(k - i + 1) / denom;
                v[k] = left + (right - left) * t;
                imputed[k] = 1;
            }
        } else {
            for (std::size_t k = i; k < j; ++k) {
                v[k] = profile(k);
                imputed[k] = 1;
            }
        }
        i = j;
    }
}

} // namespace

WeatherGrid impute_weather(const std::vector<WeatherRecord>& weather, int max_gap_linear) {
    if (weather.empty()) throw DataError("impute_weather: empty weather input");
    if (max_gap_linear < 0) throw ConfigError("impute_weather: max_gap_linear must be >= 0");

    WeatherGrid grid;
    HourStamp lo = weather.front().ts, hi = weather.front().ts;
    std::set<int> site_ids;
    for (const auto& r : weather) {
        lo = std::min(lo, r.ts);
        hi = std::max(hi, r.ts);
        site_ids.insert(r.site_id);
    }
    grid.start = lo;
    grid.n_hours = static_cast<std::size_t>(hi - lo + 1);

    for (const int site : site_ids) {
        auto& s = grid.sites[site];
        for (int var = 0; var < kNumWeatherVars; ++var) {
            s.values[static_cast<std::size_t>(var)].assign(grid.n_hours, kNaN);
            s.imputed[static_cast<std::size_t>(var)].assign(grid.n_hours, 0);
        }
    }
    for (const auto& r : weather) {
        auto& s = grid.sites[r.site_id];
        const auto idx = static_cast<std::size_t>(r.ts - grid.start);
        for (int var = 0; var < kNumWeatherVars; ++var) {
            if (const auto v = record_var(r, var)) {
                s.values[static_cast<std::size_t>(var)][idx] = *v;
                s.available[static_cast<std::size_t>(var)] = true;
            }
        }
    }
    for (auto& [site, s] : grid.sites) {
        for (int var = 0; var < kNumWeatherVars; ++var) {
            const auto v = static_cast<std::size_t>(var);
            if (!s.available[v]) continue; // no observation at this site: left missing, flagged
            fill_series(s.values[v], s.imputed[v], grid.start, max_gap_linear);
        }
    }
    return grid;
}

int canonicalize_offset(int offset) {
    int o = ((offset % 24) + 24) % 24; // 0..23
    return o >= 12 ? o - 24 : o;       // -12..11
}

std::optional<int> estimate_timezone_offset(
    const std::vector<std::pair<HourStamp, double>>& air_temps) {
    std::set<std::int64_t> days;
    for (const auto& [ts, v] : air_temps)
        if (std::isfinite(v)) days.insert(day_of_hour(ts));
    if (days.size() < 14) return std::nullopt;

    // Mean temperature by hour of day, then pick the shift whose cosine
    // template (peak 14:00) correlates best. Using the whole profile makes
    // single-hour sensor noise average out.
    double hour_sum[24] = {0};
    std::size_t hour_n[24] = {0};
    for (const auto& [ts, v] : air_temps) {
        if (!std::isfinite(v)) continue;
        hour_sum[hour_of_day(ts)] += v;
        hour_n[hour_of_day(ts)] += 1;
    }
    double profile[24];
    double mean = 0;
    int covered = 0;
    for (int h = 0; h < 24; ++h) {
        profile[h] = hour_n[h] > 0 ? hour_sum[h] / static_cast<double>(hour_n[h]) : kNaN;
        if (hour_n[h] > 0) {
            mean += profile[h];
            ++covered;
        }
    }
    if (covered < 4) return std::nullopt;
    mean /= covered;

    // one cosine value per wrapped phase, so offsets 24 apart score
    // bit-identically and the tie-break below decides between them
    double cos_of_phase[24];
    for (int ph = 0; ph < 24; ++ph) cos_of_phase[ph] = std::cos(kTau * ph / 24.0);

    int best = 0;
    double best_score = -std::numeric_limits<double>::infinity();
    for (int o = -12; o <= 14; ++o) {
        double score = 0;
        for (int h = 0; h < 24; ++h) {
            if (hour_n[h] == 0) continue;
            const int phase = ((h + o - 14) % 24 + 24) % 24;
            score += (profile[h] - mean) * cos_of_phase[phase];
        }
        const bool better =
            score > best_score ||
            (score == best_score &&
             (std::abs(o) < std::abs(best) || (std::abs(o) == std::abs(best) && o < best)));
        if (better) {
            best = o;
            best_score = score;
        }
    }
    return best;
}

std::optional<int> estimate_timezone_offset(const std::vector<WeatherRecord>& weather, int site_id) {
    std::vector<std::pair<HourStamp, double>> temps;
    for (const auto& r : weather)
        if (r.site_id == site_id && r.air_temperature) temps.emplace_back(r.ts, *r.air_temperature);
    return estimate_timezone_offset(temps);
}

void apply_timezone_offset(std::vector<WeatherRecord>& weather, int site_id, int offset) {
    for (auto& r : weather)
        if (r.site_id == site_id) r.ts += offset;
    sort_weather(weather);
}

} // namespace meterbench
