#include "meterbench/features.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <limits>

#include "meterbench/csv.hpp"
#include "meterbench/error.hpp"

namespace meterbench {

namespace {
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kDegToRad = 0.017453292519943295;
} // namespace

HolidayCalendar load_holiday_calendar(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("missing holiday calendar: " + path);
    HolidayCalendar cal;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        while (!line.empty() && (line.back() == ' ' || line.back() == '\t')) line.pop_back();
        std::size_t start = 0;
        while (start < line.size() && (line[start] == ' ' || line[start] == '\t')) ++start;
        if (start > 0) line.erase(0, start);
        if (line.empty()) continue;
        const auto d = parse_date(line);
        if (!d)
            throw ConfigError(path + ":" + std::to_string(line_no) + ": expected YYYY-MM-DD, got '" +
                              line + "'");
        cal.days.insert(days_from_civil(*d));
    }
    return cal;
}

TemporalFeatures temporal_features(HourStamp ts, const HolidayCalendar& calendar) {
    TemporalFeatures t;
    t.hour = hour_of_day(ts);
    t.weekday = weekday_of_hour(ts);
    const CivilDateTime c = civil_from_hour(ts);
    t.month = c.date.month;
    t.is_weekend = t.weekday >= 5;
    t.is_holiday = calendar.contains(ts);
    return t;
}

std::vector<double> rolling_stat(const std::vector<double>& series, int window, LagStat stat) {
    if (window <= 0) throw ConfigError("rolling window must be > 0");
    const std::size_t n = series.size();
    std::vector<double> out(n);
    if (stat == LagStat::mean) {
        double sum = 0.0;
        for (std::size_t t = 0; t < n; ++t) {
            sum += series[t];
            if (t >= static_cast<std::size_t>(window)) sum -= series[t - window];
            const auto len = std::min<std::size_t>(t + 1, static_cast<std::size_t>(window));
            out[t] = sum / static_cast<double>(len);
        }
        return out;
    }
    // monotonic deque of indices
    std::deque<std::size_t> dq;
    const bool want_min = stat == LagStat::min;
    for (std::size_t t = 0; t < n; ++t) {
        while (!dq.empty() &&
               (want_min ? series[dq.back()] >= series[t] : series[dq.back()] <= series[t]))
            dq.pop_back();
        dq.push_back(t);
        if (dq.front() + static_cast<std::size_t>(window) <= t) dq.pop_front();
        out[t] = series[dq.front()];
    }
    return out;
}

double wind_chill(double air_temp_c, double wind_speed_ms) {
    const double v_kmh = wind_speed_ms * 3.6;
    if (air_temp_c > 10.0 || v_kmh <= 4.8) return air_temp_c;
    const double vp = std::pow(v_kmh, 0.16);
    return 13.12 + 0.6215 * air_temp_c - 11.37 * vp + 0.3965 * air_temp_c * vp;
}

double dewpoint_vapor_pressure_hpa(double dew_temp_c) {
    return 6.11 * std::exp(5417.7530 * (1.0 / 273.16 - 1.0 / (273.15 + dew_temp_c)));
}

double heat_proxy(double air_temp_c, double dew_temp_c) {
    if (air_temp_c < 14.0) return air_temp_c;
    return air_temp_c + 0.555 * (dewpoint_vapor_pressure_hpa(dew_temp_c) - 10.0);
}

const char* encode_stat_name(EncodeStat s) {
    switch (s) {
        case EncodeStat::mean: return "mean";
        case EncodeStat::percentile_rank: return "percentile_rank";
        case EncodeStat::proportion_above_global_median: return "proportion_above_global_median";
    }
    return "?";
}

namespace {

double median_of(std::vector<double> v) {
    if (v.empty()) return 0.0;
    const std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + mid, v.end());
    double m = v[mid];
    if (v.size() % 2 == 0) {
        const double lower = *std::max_element(v.begin(), v.begin() + mid);
        m = 0.5 * (lower + m);
    }
    return m;
}

} // namespace

TargetEncoder TargetEncoder::fit(const FeatureMatrix& matrix, const std::vector<std::string>& key,
                                 EncodeStat stat, double smoothing_m,
                                 const std::vector<int>& fold_of_row, int n_folds) {
    if (!matrix.has_target()) throw ConfigError("target encoder needs a target column");
    if (n_folds < 2) throw ConfigError("target encoder needs n_folds >= 2");
    if (fold_of_row.size() != matrix.n_rows())
        throw InternalError("fold assignment size mismatch");
    TargetEncoder e;
    e.key_ = key;
    e.stat_ = stat;
    e.smoothing_m_ = smoothing_m;

    std::vector<std::size_t> key_cols;
    for (const auto& k : key) {
        const auto c = matrix.find(k);
        if (!c) throw ConfigError("target encoder key '" + k + "' is not in the feature registry");
        key_cols.push_back(*c);
    }

    const auto& target = matrix.target();
    auto category_of = [&](std::size_t row) {
        Category c(key_cols.size());
        for (std::size_t i = 0; i < key_cols.size(); ++i) c[i] = matrix.column(key_cols[i])[row];
        return c;
    };

    // A table from an arbitrary subset of rows; the subset IS the fit set,
    // so its global statistic leaks nothing from held-out rows.
    auto build_table = [&](const std::vector<std::size_t>& rows) {
        Table t;
        std::map<Category, std::vector<double>> groups;
        for (const auto r : rows) groups[category_of(r)].push_back(target[r]);
        if (rows.empty()) return t;

        double global_mean = 0.0;
        for (const auto r : rows) global_mean += target[r];
        global_mean /= static_cast<double>(rows.size());

        std::map<Category, double> raw;
        if (stat == EncodeStat::mean) {
            for (const auto& [cat, vals] : groups) {
                double s = 0;
                for (const double v : vals) s += v;
                raw[cat] = s / static_cast<double>(vals.size());
            }
            t.global = global_mean;
        } else if (stat == EncodeStat::percentile_rank) {
            // percentile rank of the category mean among all category means
            std::vector<std::pair<double, const Category*>> means;
            for (const auto& [cat, vals] : groups) {
                double s = 0;
                for (const double v : vals) s += v;
                means.emplace_back(s / static_cast<double>(vals.size()), &cat);
            }
            std::sort(means.begin(), means.end(),
                      [](const auto& a, const auto& b) { return a.first < b.first; });
            const double k_cats = static_cast<double>(means.size());
            std::size_t i = 0;
            while (i < means.size()) {
                std::size_t j = i;
                while (j < means.size() && means[j].first == means[i].first) ++j;
                const double avg_rank = 0.5 * static_cast<double>(i + j - 1) + 1.0; // 1-based
                for (std::size_t q = i; q < j; ++q)
                    raw[*means[q].second] = (avg_rank - 0.5) / k_cats;
                i = j;
            }
            t.global = 0.5;
        } else { // proportion_above_global_median
            std::vector<double> all;
            all.reserve(rows.size());
            for (const auto r : rows) all.push_back(target[r]);
            const double med = median_of(std::move(all));
            std::size_t above_total = 0;
            for (const auto& [cat, vals] : groups) {
                std::size_t above = 0;
                for (const double v : vals)
                    if (v > med) ++above;
                raw[cat] = static_cast<double>(above) / static_cast<double>(vals.size());
                above_total += above;
            }
            t.global = static_cast<double>(above_total) / static_cast<double>(rows.size());
        }
        for (const auto& [cat, vals] : groups) {
            const double n_c = static_cast<double>(vals.size());
            t.enc[cat] = (n_c * raw[cat] + smoothing_m * t.global) / (n_c + smoothing_m);
        }
        return t;
    };

    std::vector<std::size_t> all_rows(matrix.n_rows());
    for (std::size_t r = 0; r < all_rows.size(); ++r) all_rows[r] = r;
    e.full_table_ = build_table(all_rows);
    e.full_global_ = e.full_table_.global;

    e.fold_tables_.resize(static_cast<std::size_t>(n_folds));
    for (int f = 0; f < n_folds; ++f) {
        std::vector<std::size_t> rows;
        rows.reserve(matrix.n_rows());
        for (std::size_t r = 0; r < matrix.n_rows(); ++r)
            if (fold_of_row[r] != f) rows.push_back(r);
        e.fold_tables_[static_cast<std::size_t>(f)] = build_table(rows);
    }
    return e;
}

std::vector<double> TargetEncoder::lookup(const FeatureMatrix& matrix, const Table& table,
                                          const std::vector<std::size_t>& rows) const {
    std::vector<std::size_t> key_cols;
    for (const auto& k : key_) {
        const auto c = matrix.find(k);
        if (!c) throw ConfigError("target encoder key '" + k + "' is not in the feature registry");
        key_cols.push_back(*c);
    }
    std::vector<double> out;
    out.reserve(rows.size());
    Category cat(key_cols.size());
    for (const auto r : rows) {
        for (std::size_t i = 0; i < key_cols.size(); ++i) cat[i] = matrix.column(key_cols[i])[r];
        const auto it = table.enc.find(cat);
        out.push_back(it == table.enc.end() ? table.global : it->second);
    }
    return out;
}

std::vector<double> TargetEncoder::transform_out_of_fold(const FeatureMatrix& matrix,
                                                         const std::vector<int>& fold_of_row) const {
    if (fold_of_row.size() != matrix.n_rows()) throw InternalError("fold assignment size mismatch");
    std::vector<double> out(matrix.n_rows());
    for (std::size_t f = 0; f < fold_tables_.size(); ++f) {
        std::vector<std::size_t> rows;
        for (std::size_t r = 0; r < matrix.n_rows(); ++r)
            if (fold_of_row[r] == static_cast<int>(f)) rows.push_back(r);
        const auto vals = lookup(matrix, fold_tables_[f], rows);
        for (std::size_t i = 0; i < rows.size(); ++i) out[rows[i]] = vals[i];
    }
    return out;
}

std::vector<double> TargetEncoder::transform(const FeatureMatrix& matrix) const {
    std::vector<std::size_t> rows(matrix.n_rows());
    for (std::size_t r = 0; r < rows.size(); ++r) rows[r] = r;
    return lookup(matrix, full_table_, rows);
}

std::string LagFeatureSpec::name() const {
    std::string stat_name = stat == LagStat::mean ? "mean" : (stat == LagStat::min ? "min" : "max");
    return std::string(weather_var_name(var)) + "_" + stat_name + "_" + std::to_string(window) + "h";
}

namespace {

const char* const kBaseFeatureNames[] = {
    "site_id",       "building_id", "meter",        "primary_use",    "log_square_feet",
    "year_built",    "floor_count", "hour",         "weekday",        "month",
    "is_weekend",    "is_holiday",  "air_temperature", "dew_temperature", "cloud_coverage",
    "precip_depth_1_hr", "sea_level_pressure", "wind_speed", "wind_dir_sin", "wind_dir_cos",
    "wind_chill",    "heat_proxy"};

bool is_base_feature(const std::string& name) {
    for (const char* const n : kBaseFeatureNames)
        if (name == n) return true;
    return false;
}

FeatureKind base_feature_kind(const std::string& name) {
    for (const char* const n : {"site_id", "building_id", "meter", "primary_use", "is_weekend",
                                "is_holiday"})
        if (name == n) return FeatureKind::categorical;
    return FeatureKind::numeric;
}

} // namespace

FeatureRecipe recipe_by_name(const std::string& name) {
    FeatureRecipe r;
    r.name = name;
    if (name == "winner1") {
        r.base = {"site_id",       "building_id", "meter",          "primary_use",
                  "log_square_feet", "year_built", "floor_count",   "hour",
                  "weekday",       "month",       "is_weekend",     "is_holiday",
                  "air_temperature", "dew_temperature", "cloud_coverage", "precip_depth_1_hr",
                  "sea_level_pressure", "wind_speed", "wind_dir_sin", "wind_dir_cos",
                  "wind_chill",    "heat_proxy"};
        r.lags = {{kAirTemperature, LagStat::mean, 3},
                  {kAirTemperature, LagStat::mean, 24},
                  {kAirTemperature, LagStat::min, 24},
                  {kAirTemperature, LagStat::max, 24},
                  {kAirTemperature, LagStat::mean, 72}};
        r.encodings = {{"te_building_meter_mean",
                        {"building_id", "meter"},
                        EncodeStat::mean,
                        20.0}};
    } else if (name == "winner5") {
        r.base = {"building_id", "meter",       "hour",           "weekday",
                  "is_holiday",  "air_temperature", "dew_temperature"};
        r.encodings = {{"te_building_meter_pct", {"building_id", "meter"},
                        EncodeStat::percentile_rank, 10.0},
                       {"te_building_meter_prop", {"building_id", "meter"},
                        EncodeStat::proportion_above_global_median, 10.0},
                       {"te_building_meter_hour_mean", {"building_id", "meter", "hour"},
                        EncodeStat::mean, 5.0}};
    } else if (name == "minimal") {
        r.base = {"site_id", "meter", "hour", "weekday", "air_temperature", "log_square_feet"};
    } else {
        throw ConfigError("unknown feature recipe: " + name);
    }
    return r;
}

FeatureBuilder::FeatureBuilder(FeatureRecipe recipe, HolidayCalendars calendars, int encoder_folds)
    : recipe_(std::move(recipe)), calendars_(std::move(calendars)), encoder_folds_(encoder_folds) {
    for (const auto& b : recipe_.base)
        if (!is_base_feature(b)) throw ConfigError("unknown base feature: " + b);
    for (const auto& l : recipe_.lags) {
        if (l.window <= 0) throw ConfigError("lag window must be > 0");
        if (l.var != kAirTemperature && l.var != kDewTemperature)
            throw ConfigError("lag features support air/dew temperature only");
    }
    if (encoder_folds_ < 2) throw ConfigError("encoder_folds must be >= 2");
}

FeatureMatrix FeatureBuilder::build_base(const std::vector<RowKey>& rows, const WeatherGrid& grid,
                                         const std::vector<BuildingMeta>& buildings) const {
    std::map<int, const BuildingMeta*> meta_of;
    for (const auto& b : buildings) meta_of[b.building_id] = &b;

    FeatureMatrix m;
    m.keys() = rows;

    // resolve metadata and temporal context once per row
    const std::size_t n = rows.size();
    std::vector<const BuildingMeta*> meta(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto it = meta_of.find(rows[i].building_id);
        if (it == meta_of.end())
            throw DataError("building " + format_int(rows[i].building_id) +
                            " has no metadata row");
        meta[i] = it->second;
        if (!grid.covers(rows[i].ts) || !grid.sites.count(meta[i]->site_id))
            throw DataError("weather join miss for site " + format_int(meta[i]->site_id) +
                            " at " + format_hour(rows[i].ts));
    }

    auto weather_at = [&](std::size_t i, int var) {
        return grid.at(meta[i]->site_id, var, rows[i].ts);
    };

    for (const auto& name : recipe_.base) {
        const std::size_t col = m.add_column(name, base_feature_kind(name));
        auto& v = m.column(col);
        for (std::size_t i = 0; i < n; ++i) {
            const RowKey& rk = rows[i];
            const BuildingMeta& b = *meta[i];
            double x = kNaN;
            if (name == "site_id") x = b.site_id;
            else if (name == "building_id") x = rk.building_id;
            else if (name == "meter") x = static_cast<double>(rk.meter);
            else if (name == "primary_use") {
                const auto it = primary_use_codes_.find(b.primary_use);
                x = it == primary_use_codes_.end() ? -1.0 : it->second;
            } else if (name == "log_square_feet") x = std::log10(b.square_feet);
            else if (name == "year_built") x = b.year_built ? *b.year_built : kNaN;
            else if (name == "floor_count") x = b.floor_count ? *b.floor_count : kNaN;
            else if (name == "hour") x = hour_of_day(rk.ts);
            else if (name == "weekday") x = weekday_of_hour(rk.ts);
            else if (name == "month") x = month_of_hour(rk.ts);
            else if (name == "is_weekend") x = weekday_of_hour(rk.ts) >= 5 ? 1.0 : 0.0;
            else if (name == "is_holiday")
                x = calendars_.for_site(b.site_id).contains(rk.ts) ? 1.0 : 0.0;
            else if (name == "air_temperature") x = weather_at(i, kAirTemperature);
            else if (name == "dew_temperature") x = weather_at(i, kDewTemperature);
            else if (name == "cloud_coverage") x = weather_at(i, kCloudCoverage);
            else if (name == "precip_depth_1_hr") x = weather_at(i, kPrecipDepth1Hr);
            else if (name == "sea_level_pressure") x = weather_at(i, kSeaLevelPressure);
            else if (name == "wind_speed") x = weather_at(i, kWindSpeed);
            else if (name == "wind_dir_sin" || name == "wind_dir_cos") {
                const double dir = weather_at(i, kWindDirection);
                x = std::isnan(dir) ? kNaN
                                    : (name == "wind_dir_sin" ? std::sin(dir * kDegToRad)
                                                              : std::cos(dir * kDegToRad));
            } else if (name == "wind_chill") {
                const double t = weather_at(i, kAirTemperature);
                const double w = weather_at(i, kWindSpeed);
                x = (std::isnan(t) || std::isnan(w)) ? kNaN : wind_chill(t, w);
            } else if (name == "heat_proxy") {
                const double t = weather_at(i, kAirTemperature);
                const double d = weather_at(i, kDewTemperature);
                x = (std::isnan(t) || std::isnan(d)) ? kNaN : heat_proxy(t, d);
            }
            v[i] = x;
        }
    }

    // lag features: per-site rolling series over the whole grid, indexed per row
    for (const auto& lag : recipe_.lags) {
        const std::size_t col = m.add_column(lag.name(), FeatureKind::numeric);
        auto& v = m.column(col);
        std::map<int, std::vector<double>> per_site;
        for (std::size_t i = 0; i < n; ++i) {
            const int site = meta[i]->site_id;
            auto it = per_site.find(site);
            if (it == per_site.end()) {
                const auto& series =
                    grid.sites.at(site).values[static_cast<std::size_t>(lag.var)];
                it = per_site.emplace(site, rolling_stat(series, lag.window, lag.stat)).first;
            }
            v[i] = it->second[static_cast<std::size_t>(rows[i].ts - grid.start)];
        }
    }

    m.check_consistent();
    return m;
}

FeatureMatrix FeatureBuilder::fit_build(const std::vector<MeterReading>& readings,
                                        const WeatherGrid& grid,
                                        const std::vector<BuildingMeta>& buildings) {
    std::vector<MeterReading> sorted = readings;
    sort_readings(sorted);
    std::vector<RowKey> rows(sorted.size());
    std::vector<double> target(sorted.size());
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        rows[i] = {sorted[i].building_id, sorted[i].meter, sorted[i].ts};
        target[i] = std::log1p(sorted[i].value);
    }

    std::set<std::string> uses;
    for (const auto& b : buildings) uses.insert(b.primary_use);
    primary_use_codes_.clear();
    double code = 0;
    for (const auto& u : uses) primary_use_codes_[u] = code++;

    FeatureMatrix m = build_base(rows, grid, buildings);
    m.set_target(std::move(target));

    // training means for NaN fill, frozen for the test pass
    fill_means_.assign(m.n_cols() + recipe_.encodings.size(), 0.0);
    for (std::size_t c = 0; c < m.n_cols(); ++c) {
        auto& col = m.column(c);
        double sum = 0;
        std::size_t cnt = 0;
        for (const double x : col) {
            if (!std::isnan(x)) {
                sum += x;
                ++cnt;
            }
        }
        const double fill = cnt > 0 ? sum / static_cast<double>(cnt) : 0.0;
        fill_means_[c] = fill;
        for (auto& x : col)
            if (std::isnan(x)) x = fill;
    }

    // round-robin over the sorted rows, so every category shows up in
    // every fold's complement (contiguous blocks would put a whole
    // building-meter series into one fold and starve its own table)
    std::vector<int> fold_of(m.n_rows());
    for (std::size_t r = 0; r < m.n_rows(); ++r)
        fold_of[r] = static_cast<int>(r % static_cast<std::size_t>(encoder_folds_));

    encoders_.clear();
    for (const auto& spec : recipe_.encodings) {
        TargetEncoder enc =
            TargetEncoder::fit(m, spec.key, spec.stat, spec.smoothing_m, fold_of, encoder_folds_);
        const auto vals = enc.transform_out_of_fold(m, fold_of);
        const std::size_t col = m.add_column(spec.name, FeatureKind::numeric);
        m.column(col) = vals;
        fill_means_[col] = enc.global_fallback();
        encoders_.push_back(std::move(enc));
    }

    fitted_ = true;
    m.check_consistent();
    return m;
}

FeatureMatrix FeatureBuilder::build(const std::vector<RowKey>& rows, const WeatherGrid& grid,
                                    const std::vector<BuildingMeta>& buildings) const {
    if (!fitted_) throw InternalError("FeatureBuilder::build before fit_build");
    FeatureMatrix m = build_base(rows, grid, buildings);
    for (std::size_t c = 0; c < m.n_cols(); ++c) {
        auto& col = m.column(c);
        const double fill = fill_means_[c];
        for (auto& x : col)
            if (std::isnan(x)) x = fill;
    }
    for (std::size_t e = 0; e < encoders_.size(); ++e) {
        const auto vals = encoders_[e].transform(m);
        const std::size_t col = m.add_column(recipe_.encodings[e].name, FeatureKind::numeric);
        m.column(col) = vals;
    }
    m.check_consistent();
    return m;
}

} // namespace meterbench
