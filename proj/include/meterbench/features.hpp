#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "meterbench/matrix.hpp"
#include "meterbench/weather.hpp"

namespace meterbench {

// Per-site holiday calendar: plain text file, one YYYY-MM-DD per line,
// '#' comments allowed.
struct HolidayCalendar {
    std::set<std::int64_t> days; // days since epoch
    bool contains(HourStamp ts) const { return days.count(day_of_hour(ts)) > 0; }
};

HolidayCalendar load_holiday_calendar(const std::string& path);

struct HolidayCalendars {
    std::map<int, HolidayCalendar> per_site;
    HolidayCalendar fallback;
    const HolidayCalendar& for_site(int site_id) const {
        const auto it = per_site.find(site_id);
        return it == per_site.end() ? fallback : it->second;
    }
};

struct TemporalFeatures {
    int hour;       // 0..23
    int weekday;    // 0 Monday .. 6 Sunday
    int month;      // 1..12
    bool is_weekend;
    bool is_holiday;
};

TemporalFeatures temporal_features(HourStamp ts, const HolidayCalendar& calendar);

enum class LagStat { mean, min, max };

// Causal rolling statistic over `series`: window w at index t covers the w
// samples ending at t; the first w-1 positions use the partial window.
std::vector<double> rolling_stat(const std::vector<double>& series, int window, LagStat stat);

// North American wind chill (air degC, wind m/s); identity outside its
// applicability range (T > 10 degC or wind <= 4.8 km/h).
double wind_chill(double air_temp_c, double wind_speed_ms);

// Humidex-style heat proxy: T + 0.555 * (e - 10) for T >= 14 degC, where e
// is the dew-point vapor pressure in hPa; identity below 14 degC.
double heat_proxy(double air_temp_c, double dew_temp_c);

double dewpoint_vapor_pressure_hpa(double dew_temp_c);

enum class EncodeStat { mean, percentile_rank, proportion_above_global_median };

const char* encode_stat_name(EncodeStat s);

// Target encoder over a categorical key (a subset of registry features).
// Per-category statistics are smoothed toward the fit-set global:
//   enc = (n_c * stat_c + m * global) / (n_c + m)
// Training rows are encoded strictly out-of-fold: the table used for a row
// in fold f, including its global fallback, is computed from the other
// folds only.
class TargetEncoder {
public:
    // fold_of_row: fold index per matrix row, n_folds >= 2. Throws
    // ConfigError when a key name is not in the registry.
    static TargetEncoder fit(const FeatureMatrix& matrix, const std::vector<std::string>& key,
                             EncodeStat stat, double smoothing_m,
                             const std::vector<int>& fold_of_row, int n_folds);

    // Out-of-fold encodings for the matrix the encoder was fitted on.
    std::vector<double> transform_out_of_fold(const FeatureMatrix& matrix,
                                              const std::vector<int>& fold_of_row) const;

    // Full-table encodings for unseen (test) rows; unknown categories fall
    // back to the global statistic.
    std::vector<double> transform(const FeatureMatrix& matrix) const;

    double global_fallback() const { return full_global_; }
    const std::vector<std::string>& key() const { return key_; }

private:
    using Category = std::vector<double>;
    struct Table {
        std::map<Category, double> enc;
        double global = 0.0;
    };

    std::vector<double> lookup(const FeatureMatrix& matrix, const Table& table,
                               const std::vector<std::size_t>& rows) const;

    std::vector<std::string> key_;
    EncodeStat stat_ = EncodeStat::mean;
    double smoothing_m_ = 0.0;
    std::vector<Table> fold_tables_; // index = fold being held out
    Table full_table_;
    double full_global_ = 0.0;
};

struct LagFeatureSpec {
    int var;    // WeatherVar (air or dew temperature)
    LagStat stat;
    int window; // hours, > 0
    std::string name() const;
};

struct TargetEncodingSpec {
    std::string name;
    std::vector<std::string> key; // registry feature names
    EncodeStat stat;
    double smoothing_m = 20.0;
};

// A named feature set; base features are fixed identifiers (see
// kBaseFeatureNames in features.cpp).
struct FeatureRecipe {
    std::string name;
    std::vector<std::string> base;
    std::vector<LagFeatureSpec> lags;
    std::vector<TargetEncodingSpec> encodings;

    std::size_t total_features() const { return base.size() + lags.size() + encodings.size(); }
};

// Shipped presets: "winner1" (28 features), "winner5" (10), "minimal" (6).
FeatureRecipe recipe_by_name(const std::string& name); // throws ConfigError on unknown

// Builds aligned design matrices for training readings and test rows.
// Fitted state (category codes, imputation fill means, target encoders)
// comes from the training pass only.
class FeatureBuilder {
public:
    FeatureBuilder(FeatureRecipe recipe, HolidayCalendars calendars, int encoder_folds = 5);

    // One row per reading, sorted by (building, meter, ts); target =
    // ln(1 + kWh). Throws DataError for a building without metadata or a
    // weather join miss.
    FeatureMatrix fit_build(const std::vector<MeterReading>& readings,
                            const WeatherGrid& grid,
                            const std::vector<BuildingMeta>& buildings);

    // Rows in the given order, no target. Requires fit_build first.
    FeatureMatrix build(const std::vector<RowKey>& rows, const WeatherGrid& grid,
                        const std::vector<BuildingMeta>& buildings) const;

    const FeatureRecipe& recipe() const { return recipe_; }

private:
    FeatureMatrix build_base(const std::vector<RowKey>& rows, const WeatherGrid& grid,
                             const std::vector<BuildingMeta>& buildings) const;

    FeatureRecipe recipe_;
    HolidayCalendars calendars_;
    int encoder_folds_;
    bool fitted_ = false;
    std::map<std::string, double> primary_use_codes_;
    std::vector<double> fill_means_; // per column, training means for NaN fill
    std::vector<TargetEncoder> encoders_;
};

} // namespace meterbench
