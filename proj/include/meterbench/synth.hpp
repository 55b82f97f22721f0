#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "meterbench/records.hpp"
#include "meterbench/timeutil.hpp"

namespace meterbench {

struct DefectRates {
    double constant_streak = 0.0; // per (building, meter) series
    double missing_weather = 0.0; // per weather cell, plus occasional long gaps
    double site_wide_zero = 0.0;  // per site
    double unit_rescale = 0.0;    // per site (electricity written in kBTU)
    double timezone_shift = 0.0;  // per site (weather stamps offset)
};

struct SyntheticSpec {
    int n_sites = 2;
    int buildings_per_site = 5;
    // electricity is always present; other meter types independently
    double p_chilledwater = 0.5;
    double p_steam = 0.25;
    double p_hotwater = 0.25;
    CivilDate start{2016, 1, 1};
    CivilDate end{2018, 12, 31};
    std::uint64_t seed = 1;
    DefectRates defect_rates;

    void validate() const; // throws ConfigError
};

SyntheticSpec load_synthetic_spec(const std::string& json_path);

// Generated-run manifest: file hashes, injected defects, summary counts.
struct SynthManifest {
    std::vector<Record> records;

    std::vector<Record> defects(const std::string& kind = "") const;
    const Record& summary() const;
    void write(const std::string& path) const;
};

SynthManifest load_manifest(const std::string& path);

// Emits train.csv, building_meta.csv, weather_train.csv, weather_test.csv,
// test.csv and ground_truth.csv under out_dir, plus manifest.txt. Identical
// specs produce byte-identical files. Ground truth is a separate file so
// pipelines cannot read it by accident; only the scorer loads it.
SynthManifest generate_synthetic(const SyntheticSpec& spec, const std::string& out_dir);

// kBTU -> kWh; the factor the unit_rescale defect divides by (and a
// cleaning rule multiplies back).
constexpr double kKbtuToKwh = 0.293071;

} // namespace meterbench
