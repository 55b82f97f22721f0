#pragma once

#include <array>
#include <map>
#include <optional>
#include <vector>

#include "meterbench/dataset.hpp"

namespace meterbench {

enum WeatherVar : int {
    kAirTemperature = 0,
    kCloudCoverage,
    kDewTemperature,
    kPrecipDepth1Hr,
    kSeaLevelPressure,
    kWindDirection,
    kWindSpeed,
    kNumWeatherVars,
};

const char* weather_var_name(int var);

// Complete hourly weather per site over one shared date range. Variables
// with no observation at a site stay unavailable (NaN) rather than being
// invented.
struct WeatherGrid {
    struct SiteGrid {
        std::array<std::vector<double>, kNumWeatherVars> values;
        std::array<std::vector<std::uint8_t>, kNumWeatherVars> imputed;
        std::array<bool, kNumWeatherVars> available{};
    };

    HourStamp start = 0;
    std::size_t n_hours = 0;
    std::map<int, SiteGrid> sites;

    bool covers(HourStamp ts) const { return ts >= start && ts < start + (HourStamp)n_hours; }
    double at(int site_id, int var, HourStamp ts) const; // NaN if unavailable
    std::size_t imputed_cells() const;
    std::size_t missing_input_cells() const; // cells that had no observation
};

// Builds the full grid from observations. Gaps of at most max_gap_linear
// hours are linearly interpolated in time; longer gaps and edges fall back
// to the site's hour-of-day mean profile of observed values. Every filled
// cell is flagged. Throws DataError when `weather` is empty.
WeatherGrid impute_weather(const std::vector<WeatherRecord>& weather, int max_gap_linear);

// Integer hour offset in [-12, +14] that best aligns the mean diurnal
// peak of `air_temps` (pairs of hour stamp and temperature, file time)
// with 14:00 local. Ties prefer smaller |offset|, then negative. Returns
// nullopt when the series spans fewer than 14 days of observations.
std::optional<int> estimate_timezone_offset(
    const std::vector<std::pair<HourStamp, double>>& air_temps);

// Offset estimation straight from raw records for one site.
std::optional<int> estimate_timezone_offset(const std::vector<WeatherRecord>& weather, int site_id);

// Maps an arbitrary hour offset into the estimator's canonical range
// [-12, 11] (the representative its tie-breaking selects).
int canonicalize_offset(int offset);

// Shifts every record of `site_id` by `offset` hours (file -> local time).
void apply_timezone_offset(std::vector<WeatherRecord>& weather, int site_id, int offset);

} // namespace meterbench
