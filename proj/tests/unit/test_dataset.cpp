#include <doctest.h>

#include <filesystem>
#include <tuple>
#include <fstream>

#include "meterbench/dataset.hpp"
#include "meterbench/error.hpp"

using namespace meterbench;
namespace fs = std::filesystem;

namespace {

fs::path temp_dir(const std::string& name) {
    const fs::path dir = fs::temp_directory_path() / "mb_tests" / name;
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

void write_file(const fs::path& p, const std::string& content) {
    std::ofstream out(p);
    out << content;
}

} // namespace

TEST_CASE("load readings: one valid row") {
    const auto dir = temp_dir("readings1");
    write_file(dir / "train.csv",
               "building_id,meter,timestamp,meter_reading\n0,0,2016-01-01 00:00:00,12.5\n");
    RejectsReport rejects;
    const auto rows = load_readings_csv((dir / "train.csv").string(), rejects);
    REQUIRE(rows.size() == 1);
    CHECK(rows[0].building_id == 0);
    CHECK(rows[0].meter == MeterType::electricity);
    CHECK(format_hour(rows[0].ts) == "2016-01-01 00:00:00");
    CHECK(rows[0].value == 12.5);
    CHECK(rejects.entries.empty());
}

TEST_CASE("load readings: header only gives empty list and empty rejects") {
    const auto dir = temp_dir("readings2");
    write_file(dir / "train.csv", "building_id,meter,timestamp,meter_reading\n");
    RejectsReport rejects;
    CHECK(load_readings_csv((dir / "train.csv").string(), rejects).empty());
    CHECK(rejects.entries.empty());
}

TEST_CASE("load readings: meter=7 lands in the rejects report") {
    const auto dir = temp_dir("readings3");
    write_file(dir / "train.csv",
               "building_id,meter,timestamp,meter_reading\n"
               "0,7,2016-01-01 00:00:00,12.5\n"
               "0,1,2016-01-01 00:00:00,3.5\n");
    RejectsReport rejects;
    const auto rows = load_readings_csv((dir / "train.csv").string(), rejects);
    CHECK(rows.size() == 1);
    REQUIRE(rejects.entries.size() == 1);
    CHECK(rejects.entries[0].action == "dropped");
    CHECK(rejects.entries[0].reason.find("MeterType") != std::string::npos);
    CHECK(rejects.entries[0].line == 2);
}

TEST_CASE("load readings: negative, misaligned and malformed rows are dropped") {
    const auto dir = temp_dir("readings4");
    write_file(dir / "train.csv",
               "building_id,meter,timestamp,meter_reading\n"
               "0,0,2016-01-01 00:30:00,1\n"
               "0,0,2016-01-01 01:00:00,-2\n"
               "x,0,2016-01-01 02:00:00,1\n"
               "0,0,2016-01-01 03:00:00,\n"
               "0,0,2016-01-01 04:00:00,4\n");
    RejectsReport rejects;
    const auto rows = load_readings_csv((dir / "train.csv").string(), rejects);
    CHECK(rows.size() == 1);
    CHECK(rejects.dropped_count() == 4);
}

TEST_CASE("load readings: missing file and unknown column are fatal") {
    const auto dir = temp_dir("readings5");
    RejectsReport rejects;
    CHECK_THROWS_AS(load_readings_csv((dir / "nope.csv").string(), rejects), DataError);
    write_file(dir / "train.csv", "building_id,meter,timestamp,meter_reading,bogus\n");
    CHECK_THROWS_AS(load_readings_csv((dir / "train.csv").string(), rejects), DataError);
    write_file(dir / "t2.csv", "building_id,meter,timestamp\n");
    CHECK_THROWS_AS(load_readings_csv((dir / "t2.csv").string(), rejects), DataError);
}

TEST_CASE("building meta: duplicates and bad square_feet rejected") {
    const auto dir = temp_dir("meta1");
    write_file(dir / "building_meta.csv",
               "site_id,building_id,primary_use,square_feet,year_built,floor_count\n"
               "0,0,Education,50000,1990,3\n"
               "0,0,Office,60000,,\n"
               "0,1,Office,0,2000,1\n"
               "1,2,\"Lodging, residential\",80000,,5\n");
    RejectsReport rejects;
    const auto rows = load_building_meta_csv((dir / "building_meta.csv").string(), rejects);
    REQUIRE(rows.size() == 2);
    CHECK(rows[0].building_id == 0);
    CHECK(rows[0].year_built == 1990);
    CHECK(rows[1].primary_use == "Lodging, residential"); // quoted field
    CHECK_FALSE(rows[1].year_built.has_value());
    CHECK(rejects.dropped_count() == 2);
}

TEST_CASE("weather: duplicate (site, ts) dropped; dew > air + 3 flagged not fatal") {
    const auto dir = temp_dir("weather1");
    write_file(dir / "weather_train.csv",
               "site_id,timestamp,air_temperature,cloud_coverage,dew_temperature,"
               "precip_depth_1_hr,sea_level_pressure,wind_direction,wind_speed\n"
               "0,2016-01-01 00:00:00,10,4,8,0,1013,180,3\n"
               "0,2016-01-01 00:00:00,11,4,8,0,1013,180,3\n"
               "0,2016-01-01 01:00:00,10,4,20,0,1013,180,3\n"
               "0,2016-01-01 02:00:00,,,,,,,\n");
    RejectsReport rejects;
    const auto rows = load_weather_csv((dir / "weather_train.csv").string(), rejects);
    CHECK(rows.size() == 3); // duplicate dropped, flagged rows kept
    CHECK(rejects.dropped_count() == 1);
    bool flagged = false;
    for (const auto& e : rejects.entries)
        if (e.action == "flagged" && e.reason.find("dew_temperature") != std::string::npos)
            flagged = true;
    CHECK(flagged);
    CHECK_FALSE(rows[2].air_temperature.has_value()); // all-missing row kept
}

TEST_CASE("test rows: in order, dense") {
    const auto dir = temp_dir("test1");
    write_file(dir / "test.csv",
               "row_id,building_id,meter,timestamp\n"
               "2,0,0,2017-01-01 02:00:00\n"
               "0,0,0,2017-01-01 00:00:00\n"
               "1,0,0,2017-01-01 01:00:00\n");
    const auto rows = load_test_rows((dir / "test.csv").string());
    REQUIRE(rows.size() == 3);
    CHECK(rows[0].row_id == 0);
    CHECK(rows[2].row_id == 2);
}

TEST_CASE("test rows: gap, duplicate and out-of-range timestamp are fatal") {
    const auto dir = temp_dir("test2");
    write_file(dir / "gap.csv",
               "row_id,building_id,meter,timestamp\n"
               "0,0,0,2017-01-01 00:00:00\n"
               "2,0,0,2017-01-01 02:00:00\n");
    CHECK_THROWS_AS(load_test_rows((dir / "gap.csv").string()), DataError);
    write_file(dir / "dup.csv",
               "row_id,building_id,meter,timestamp\n"
               "0,0,0,2017-01-01 00:00:00\n"
               "0,0,0,2017-01-01 01:00:00\n");
    CHECK_THROWS_AS(load_test_rows((dir / "dup.csv").string()), DataError);
    write_file(dir / "range.csv",
               "row_id,building_id,meter,timestamp\n"
               "0,0,0,2016-06-01 00:00:00\n");
    CHECK_THROWS_AS(load_test_rows((dir / "range.csv").string()), DataError);
}

TEST_CASE("round trip: write(load(csv)) reproduces bytes") {
    const auto dir = temp_dir("roundtrip");
    const std::string original =
        "building_id,meter,timestamp,meter_reading\n"
        "0,0,2016-01-01 00:00:00,12.5\n"
        "0,0,2016-01-01 01:00:00,0.1\n"
        "3,2,2016-06-01 13:00:00,1234.5678\n";
    write_file(dir / "train.csv", original);
    RejectsReport rejects;
    const auto rows = load_readings_csv((dir / "train.csv").string(), rejects);
    write_readings_csv((dir / "out.csv").string(), rows);
    std::ifstream in(dir / "out.csv");
    std::string written((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    CHECK(written == original);
}

TEST_CASE("prediction csv: any order accepted, missing row fatal") {
    const auto dir = temp_dir("preds");
    write_file(dir / "sub.csv", "row_id,meter_reading\n1,2.5\n0,1.5\n");
    const auto preds = load_prediction_csv((dir / "sub.csv").string(), 2);
    CHECK(preds[0] == 1.5);
    CHECK(preds[1] == 2.5);
    write_file(dir / "short.csv", "row_id,meter_reading\n0,1.5\n");
    CHECK_THROWS_AS(load_prediction_csv((dir / "short.csv").string(), 2), DataError);
    write_file(dir / "neg.csv", "row_id,meter_reading\n0,-1\n1,1\n");
    CHECK_THROWS_AS(load_prediction_csv((dir / "neg.csv").string(), 2), DataError);
}

TEST_CASE("loaders return sorted collections") {
    const auto dir = temp_dir("sorted");
    write_file(dir / "train.csv",
               "building_id,meter,timestamp,meter_reading\n"
               "1,0,2016-01-01 05:00:00,1\n"
               "0,1,2016-01-01 00:00:00,2\n"
               "0,0,2016-01-01 03:00:00,3\n"
               "0,0,2016-01-01 01:00:00,4\n");
    RejectsReport rejects;
    const auto rows = load_readings_csv((dir / "train.csv").string(), rejects);
    REQUIRE(rows.size() == 4);
    for (std::size_t i = 1; i < rows.size(); ++i) {
        const auto key = [](const MeterReading& r) {
            return std::make_tuple(r.building_id, static_cast<int>(r.meter), r.ts);
        };
        CHECK(key(rows[i - 1]) < key(rows[i]));
    }
    write_file(dir / "weather_train.csv",
               "site_id,timestamp,air_temperature,cloud_coverage,dew_temperature,"
               "precip_depth_1_hr,sea_level_pressure,wind_direction,wind_speed\n"
               "1,2016-01-01 00:00:00,1,,,,,,\n"
               "0,2016-01-01 02:00:00,2,,,,,,\n"
               "0,2016-01-01 00:00:00,3,,,,,,\n");
    const auto weather = load_weather_csv((dir / "weather_train.csv").string(), rejects);
    REQUIRE(weather.size() == 3);
    CHECK(weather[0].site_id == 0);
    CHECK(weather[0].ts < weather[1].ts);
    CHECK(weather[2].site_id == 1);
}
