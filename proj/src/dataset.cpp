#include "meterbench/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <map>
#include <set>

#include "meterbench/csv.hpp"
#include "meterbench/error.hpp"
#include "meterbench/records.hpp"

namespace meterbench {

namespace fs = std::filesystem;

const char* meter_name(MeterType m) {
    switch (m) {
        case MeterType::electricity: return "electricity";
        case MeterType::chilledwater: return "chilledwater";
        case MeterType::steam: return "steam";
        case MeterType::hotwater: return "hotwater";
    }
    return "?";
}

std::size_t RejectsReport::dropped_count() const {
    std::size_t n = 0;
    for (const auto& e : entries)
        if (e.action == "dropped") ++n;
    return n;
}

void RejectsReport::add(std::string file, std::size_t line, std::string action, std::string reason) {
    entries.push_back({std::move(file), line, std::move(action), std::move(reason)});
}

void RejectsReport::write(const std::string& path) const {
    std::vector<Record> recs;
    recs.reserve(entries.size() + 1);
    for (const auto& e : entries) {
        Record r;
        r.kind = "reject";
        r.set("file", e.file).set_int("line", static_cast<std::int64_t>(e.line));
        r.set("action", e.action).set("reason", e.reason);
        recs.push_back(std::move(r));
    }
    Record summary;
    summary.kind = "summary";
    summary.set_int("entries", static_cast<std::int64_t>(entries.size()));
    summary.set_int("dropped", static_cast<std::int64_t>(dropped_count()));
    recs.push_back(std::move(summary));
    write_records(path, recs);
}

namespace {

// Header must match the schema exactly (order-insensitive); unknown or
// missing columns are fatal.
std::vector<std::size_t> check_columns(const CsvReader& reader,
                                       const std::vector<std::string>& expected) {
    for (const auto& name : reader.header()) {
        if (std::find(expected.begin(), expected.end(), name) == expected.end())
            throw DataError(reader.path() + ": unknown column '" + name + "'");
    }
    std::vector<std::size_t> idx;
    idx.reserve(expected.size());
    for (const auto& name : expected) {
        const auto c = reader.column(name);
        if (!c) throw DataError(reader.path() + ": missing column '" + name + "'");
        idx.push_back(*c);
    }
    return idx;
}

std::string basename_of(const std::string& path) { return fs::path(path).filename().string(); }

bool finite_nonneg(double v) { return std::isfinite(v) && v >= 0.0; }

} // namespace

std::vector<MeterReading> load_readings_csv(const std::string& path, RejectsReport& rejects) {
    CsvReader reader(path);
    const auto idx = check_columns(reader, {"building_id", "meter", "timestamp", "meter_reading"});
    const std::string file = basename_of(path);
    std::vector<MeterReading> rows;
    while (reader.next_row()) {
        if (reader.n_fields() != 4) {
            rejects.add(file, reader.line_number(), "dropped", "wrong field count");
            continue;
        }
        const auto building = parse_int(reader.field(idx[0]));
        const auto meter = parse_int(reader.field(idx[1]));
        const auto ts = parse_hour(reader.field(idx[2]));
        const auto value = parse_double(reader.field(idx[3]));
        if (!building) {
            rejects.add(file, reader.line_number(), "dropped", "bad building_id");
            continue;
        }
        if (!meter || !meter_code_valid(*meter)) {
            rejects.add(file, reader.line_number(), "dropped",
                        "meter code outside 0..3 (MeterType violation)");
            continue;
        }
        if (!ts) {
            rejects.add(file, reader.line_number(), "dropped",
                        "timestamp not hour-aligned YYYY-MM-DD HH:MM:SS");
            continue;
        }
        if (!value || !finite_nonneg(*value)) {
            rejects.add(file, reader.line_number(), "dropped",
                        "meter_reading missing, negative or non-finite");
            continue;
        }
        rows.push_back({static_cast<int>(*building), static_cast<MeterType>(*meter), *ts, *value});
    }
    sort_readings(rows);
    return rows;
}

std::vector<BuildingMeta> load_building_meta_csv(const std::string& path, RejectsReport& rejects) {
    CsvReader reader(path);
    const auto idx = check_columns(
        reader, {"site_id", "building_id", "primary_use", "square_feet", "year_built", "floor_count"});
    const std::string file = basename_of(path);
    std::vector<BuildingMeta> rows;
    std::set<int> seen;
    while (reader.next_row()) {
        if (reader.n_fields() != 6) {
            rejects.add(file, reader.line_number(), "dropped", "wrong field count");
            continue;
        }
        const auto site = parse_int(reader.field(idx[0]));
        const auto building = parse_int(reader.field(idx[1]));
        const std::string use(reader.field(idx[2]));
        const auto sqft = parse_double(reader.field(idx[3]));
        if (!site || !building) {
            rejects.add(file, reader.line_number(), "dropped", "bad site_id or building_id");
            continue;
        }
        if (!sqft || !(*sqft > 0.0) || !std::isfinite(*sqft)) {
            rejects.add(file, reader.line_number(), "dropped", "square_feet must be > 0");
            continue;
        }
        if (!seen.insert(static_cast<int>(*building)).second) {
            rejects.add(file, reader.line_number(), "dropped", "duplicate building_id");
            continue;
        }
        BuildingMeta b;
        b.site_id = static_cast<int>(*site);
        b.building_id = static_cast<int>(*building);
        b.primary_use = use;
        b.square_feet = *sqft;
        if (const auto y = parse_int(reader.field(idx[4]))) b.year_built = static_cast<int>(*y);
        if (const auto f = parse_int(reader.field(idx[5]))) b.floor_count = static_cast<int>(*f);
        rows.push_back(std::move(b));
    }
    std::sort(rows.begin(), rows.end(),
              [](const BuildingMeta& a, const BuildingMeta& b) { return a.building_id < b.building_id; });
    return rows;
}

std::vector<WeatherRecord> load_weather_csv(const std::string& path, RejectsReport& rejects) {
    CsvReader reader(path);
    const auto idx = check_columns(
        reader, {"site_id", "timestamp", "air_temperature", "cloud_coverage", "dew_temperature",
                 "precip_depth_1_hr", "sea_level_pressure", "wind_direction", "wind_speed"});
    const std::string file = basename_of(path);
    std::vector<WeatherRecord> rows;
    std::set<std::pair<int, HourStamp>> seen;
    while (reader.next_row()) {
        if (reader.n_fields() != 9) {
            rejects.add(file, reader.line_number(), "dropped", "wrong field count");
            continue;
        }
        const auto site = parse_int(reader.field(idx[0]));
        const auto ts = parse_hour(reader.field(idx[1]));
        if (!site || !ts) {
            rejects.add(file, reader.line_number(), "dropped", "bad site_id or timestamp");
            continue;
        }
        WeatherRecord w;
        w.site_id = static_cast<int>(*site);
        w.ts = *ts;
        auto opt_field = [&](std::size_t i) -> std::optional<double> {
            const auto v = parse_double(reader.field(idx[i]));
            if (v && !std::isfinite(*v)) return std::nullopt;
            return v;
        };
        w.air_temperature = opt_field(2);
        w.cloud_coverage = opt_field(3);
        w.dew_temperature = opt_field(4);
        w.precip_depth_1_hr = opt_field(5);
        w.sea_level_pressure = opt_field(6);
        w.wind_direction = opt_field(7);
        w.wind_speed = opt_field(8);
        if (w.cloud_coverage && (*w.cloud_coverage < 0 || *w.cloud_coverage > 9)) {
            rejects.add(file, reader.line_number(), "flagged", "cloud_coverage outside 0..9 oktas");
            w.cloud_coverage.reset();
        }
        if (w.wind_direction && (*w.wind_direction < 0 || *w.wind_direction > 360)) {
            rejects.add(file, reader.line_number(), "flagged", "wind_direction outside 0..360");
            w.wind_direction.reset();
        }
        if (w.wind_speed && *w.wind_speed < 0) {
            rejects.add(file, reader.line_number(), "flagged", "negative wind_speed");
            w.wind_speed.reset();
        }
        // 3 degC slack for sensor noise; flagged, not fatal
        if (w.air_temperature && w.dew_temperature &&
            *w.dew_temperature > *w.air_temperature + 3.0) {
            rejects.add(file, reader.line_number(), "flagged",
                        "dew_temperature exceeds air_temperature + 3.0");
        }
        if (!seen.insert({w.site_id, w.ts}).second) {
            rejects.add(file, reader.line_number(), "dropped", "duplicate (site_id, timestamp)");
            continue;
        }
        rows.push_back(std::move(w));
    }
    sort_weather(rows);
    return rows;
}

TrainingBundle load_training_bundle(const std::string& dir_path) {
    const fs::path dir(dir_path);
    TrainingBundle bundle;
    bundle.readings = load_readings_csv((dir / "train.csv").string(), bundle.rejects);
    bundle.buildings = load_building_meta_csv((dir / "building_meta.csv").string(), bundle.rejects);
    bundle.weather = load_weather_csv((dir / "weather_train.csv").string(), bundle.rejects);
    const fs::path weather_test = dir / "weather_test.csv";
    if (fs::exists(weather_test)) {
        auto more = load_weather_csv(weather_test.string(), bundle.rejects);
        bundle.weather.insert(bundle.weather.end(), more.begin(), more.end());
        sort_weather(bundle.weather);
    }
    return bundle;
}

std::vector<TestRow> load_test_rows(const std::string& path) {
    CsvReader reader(path);
    const auto idx = check_columns(reader, {"row_id", "building_id", "meter", "timestamp"});
    const HourStamp lo = hour_from_civil(2017, 1, 1, 0);
    const HourStamp hi = hour_from_civil(2018, 12, 31, 23);
    std::vector<TestRow> rows;
    while (reader.next_row()) {
        if (reader.n_fields() != 4)
            throw DataError(path + ":" + format_int((std::int64_t)reader.line_number()) +
                            ": wrong field count");
        const auto row_id = parse_int(reader.field(idx[0]));
        const auto building = parse_int(reader.field(idx[1]));
        const auto meter = parse_int(reader.field(idx[2]));
        const auto ts = parse_hour(reader.field(idx[3]));
        const std::string where = path + ":" + format_int((std::int64_t)reader.line_number());
        if (!row_id || *row_id < 0) throw DataError(where + ": bad row_id");
        if (!building) throw DataError(where + ": bad building_id");
        if (!meter || !meter_code_valid(*meter)) throw DataError(where + ": meter code outside 0..3");
        if (!ts) throw DataError(where + ": bad timestamp");
        if (*ts < lo || *ts > hi)
            throw DataError(where + ": timestamp outside the 2017-2018 test range");
        rows.push_back({*row_id, static_cast<int>(*building), static_cast<MeterType>(*meter), *ts});
    }
    std::sort(rows.begin(), rows.end(),
              [](const TestRow& a, const TestRow& b) { return a.row_id < b.row_id; });
    // Submission alignment depends on density, so gaps and duplicates are fatal.
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].row_id != static_cast<std::int64_t>(i)) {
            if (i > 0 && rows[i].row_id == rows[i - 1].row_id)
                throw DataError(path + ": duplicate row_id " + format_int(rows[i].row_id));
            throw DataError(path + ": row_id gap before " + format_int(rows[i].row_id) +
                            " (expected " + format_int((std::int64_t)i) + ")");
        }
    }
    return rows;
}

std::vector<double> load_prediction_csv(const std::string& path, std::size_t expected_rows) {
    CsvReader reader(path);
    const auto idx = check_columns(reader, {"row_id", "meter_reading"});
    std::vector<double> preds(expected_rows, std::nan(""));
    std::size_t filled = 0;
    std::vector<std::int64_t> bad;
    while (reader.next_row()) {
        const auto row_id = parse_int(reader.field(idx[0]));
        const auto value = parse_double(reader.field(idx[1]));
        if (!row_id || *row_id < 0 || static_cast<std::size_t>(*row_id) >= expected_rows ||
            !value || !finite_nonneg(*value) || !std::isnan(preds[*row_id])) {
            bad.push_back(row_id ? *row_id : -static_cast<std::int64_t>(reader.line_number()));
            if (bad.size() >= 10) break;
            continue;
        }
        preds[static_cast<std::size_t>(*row_id)] = *value;
        ++filled;
    }
    if (!bad.empty()) {
        std::string msg = path + ": invalid submission rows (row_id or line):";
        for (const auto b : bad) msg += " " + format_int(b);
        throw DataError(msg);
    }
    if (filled != expected_rows) {
        std::string msg = path + ": submission has " + format_int((std::int64_t)filled) +
                          " rows, expected " + format_int((std::int64_t)expected_rows) +
                          "; first missing row_ids:";
        int listed = 0;
        for (std::size_t i = 0; i < expected_rows && listed < 10; ++i) {
            if (std::isnan(preds[i])) {
                msg += " " + format_int((std::int64_t)i);
                ++listed;
            }
        }
        throw DataError(msg);
    }
    return preds;
}

void write_prediction_csv(const std::string& path, const std::vector<double>& preds) {
    CsvWriter w(path);
    w.write_row({"row_id", "meter_reading"});
    for (std::size_t i = 0; i < preds.size(); ++i)
        w.write_row({format_int((std::int64_t)i), format_double(preds[i])});
    w.close();
}

void write_readings_csv(const std::string& path, const std::vector<MeterReading>& rows) {
    CsvWriter w(path);
    w.write_row({"building_id", "meter", "timestamp", "meter_reading"});
    for (const auto& r : rows)
        w.write_row({format_int(r.building_id), format_int(static_cast<int>(r.meter)),
                     format_hour(r.ts), format_double(r.value)});
    w.close();
}

void write_building_meta_csv(const std::string& path, const std::vector<BuildingMeta>& rows) {
    CsvWriter w(path);
    w.write_row({"site_id", "building_id", "primary_use", "square_feet", "year_built", "floor_count"});
    for (const auto& b : rows)
        w.write_row({format_int(b.site_id), format_int(b.building_id), b.primary_use,
                     format_double(b.square_feet),
                     b.year_built ? format_int(*b.year_built) : std::string(),
                     b.floor_count ? format_int(*b.floor_count) : std::string()});
    w.close();
}

void write_weather_csv(const std::string& path, const std::vector<WeatherRecord>& rows) {
    CsvWriter w(path);
    w.write_row({"site_id", "timestamp", "air_temperature", "cloud_coverage", "dew_temperature",
                 "precip_depth_1_hr", "sea_level_pressure", "wind_direction", "wind_speed"});
    auto fmt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
    for (const auto& r : rows)
        w.write_row({format_int(r.site_id), format_hour(r.ts), fmt(r.air_temperature),
                     fmt(r.cloud_coverage), fmt(r.dew_temperature), fmt(r.precip_depth_1_hr),
                     fmt(r.sea_level_pressure), fmt(r.wind_direction), fmt(r.wind_speed)});
    w.close();
}

void write_test_rows_csv(const std::string& path, const std::vector<TestRow>& rows) {
    CsvWriter w(path);
    w.write_row({"row_id", "building_id", "meter", "timestamp"});
    for (const auto& r : rows)
        w.write_row({format_int(r.row_id), format_int(r.building_id),
                     format_int(static_cast<int>(r.meter)), format_hour(r.ts)});
    w.close();
}

void sort_readings(std::vector<MeterReading>& rows) {
    std::sort(rows.begin(), rows.end(), [](const MeterReading& a, const MeterReading& b) {
        if (a.building_id != b.building_id) return a.building_id < b.building_id;
        if (a.meter != b.meter) return a.meter < b.meter;
        return a.ts < b.ts;
    });
}

void sort_weather(std::vector<WeatherRecord>& rows) {
    std::sort(rows.begin(), rows.end(), [](const WeatherRecord& a, const WeatherRecord& b) {
        if (a.site_id != b.site_id) return a.site_id < b.site_id;
        return a.ts < b.ts;
    });
}

} // namespace meterbench
