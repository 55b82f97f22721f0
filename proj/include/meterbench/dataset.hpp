#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "meterbench/timeutil.hpp"

namespace meterbench {

// Meter codes: 0 electricity, 1 chilledwater, 2 steam, 3 hotwater.
enum class MeterType : int {
    electricity = 0,
    chilledwater = 1,
    steam = 2,
    hotwater = 3,
};

constexpr int kNumMeterTypes = 4;

inline bool meter_code_valid(std::int64_t code) { return code >= 0 && code <= 3; }
const char* meter_name(MeterType m);

struct MeterReading {
    int building_id;
    MeterType meter;
    HourStamp ts;      // hour-aligned
    double value;      // kWh, >= 0 finite
};

struct BuildingMeta {
    int site_id;
    int building_id;
    std::string primary_use;
    double square_feet;             // > 0
    std::optional<int> year_built;
    std::optional<int> floor_count;
};

struct WeatherRecord {
    int site_id;
    HourStamp ts;
    std::optional<double> air_temperature;   // degC
    std::optional<double> cloud_coverage;    // oktas 0-9
    std::optional<double> dew_temperature;   // degC
    std::optional<double> precip_depth_1_hr; // mm
    std::optional<double> sea_level_pressure;// hPa
    std::optional<double> wind_direction;    // deg 0-360
    std::optional<double> wind_speed;        // m/s >= 0
};

struct TestRow {
    std::int64_t row_id; // dense, unique, starting at 0
    int building_id;
    MeterType meter;
    HourStamp ts; // within [2017-01-01, 2018-12-31]
};

// One entry per defective or suspicious input row. action is "dropped"
// (row excluded) or "flagged" (row kept, recorded for inspection).
struct RejectEntry {
    std::string file;
    std::size_t line;
    std::string action;
    std::string reason;
};

struct RejectsReport {
    std::vector<RejectEntry> entries;
    std::size_t dropped_count() const;
    void add(std::string file, std::size_t line, std::string action, std::string reason);
    void write(const std::string& path) const;
};

struct TrainingBundle {
    std::vector<MeterReading> readings;  // sorted by (building, meter, ts)
    std::vector<BuildingMeta> buildings; // sorted by building_id
    std::vector<WeatherRecord> weather;  // sorted by (site, ts)
    RejectsReport rejects;
};

// Reads train.csv, building_meta.csv and weather_train.csv from dir_path
// (plus weather_test.csv when present, appended to .weather). Rows
// violating type invariants land in the rejects report; missing files and
// unknown columns throw DataError.
TrainingBundle load_training_bundle(const std::string& dir_path);

std::vector<MeterReading> load_readings_csv(const std::string& path, RejectsReport& rejects);
std::vector<BuildingMeta> load_building_meta_csv(const std::string& path, RejectsReport& rejects);
std::vector<WeatherRecord> load_weather_csv(const std::string& path, RejectsReport& rejects);

// test.csv; duplicate or gapped row_id and out-of-range timestamps are fatal.
std::vector<TestRow> load_test_rows(const std::string& path);

// submission / ground truth files: "row_id,meter_reading".
std::vector<double> load_prediction_csv(const std::string& path, std::size_t expected_rows);
void write_prediction_csv(const std::string& path, const std::vector<double>& preds);

void write_readings_csv(const std::string& path, const std::vector<MeterReading>& rows);
void write_building_meta_csv(const std::string& path, const std::vector<BuildingMeta>& rows);
void write_weather_csv(const std::string& path, const std::vector<WeatherRecord>& rows);
void write_test_rows_csv(const std::string& path, const std::vector<TestRow>& rows);

void sort_readings(std::vector<MeterReading>& rows);
void sort_weather(std::vector<WeatherRecord>& rows);

} // namespace meterbench
