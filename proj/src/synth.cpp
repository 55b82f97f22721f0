#include "meterbench/synth.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>

#include <json.hpp>

#include "meterbench/csv.hpp"
#include "meterbench/dataset.hpp"
#include "meterbench/error.hpp"
#include "meterbench/rng.hpp"
#include "meterbench/sha256.hpp"

namespace meterbench {

namespace fs = std::filesystem;
using nlohmann::json;

void SyntheticSpec::validate() const {
    if (n_sites < 1 || buildings_per_site < 1)
        throw ConfigError("synthetic spec: n_sites and buildings_per_site must be >= 1");
    for (const double p : {p_chilledwater, p_steam, p_hotwater})
        if (p < 0.0 || p > 1.0) throw ConfigError("synthetic spec: meter probabilities must be in [0,1]");
    const auto rates = {defect_rates.constant_streak, defect_rates.missing_weather,
                        defect_rates.site_wide_zero, defect_rates.unit_rescale,
                        defect_rates.timezone_shift};
    for (const double r : rates)
        if (r < 0.0 || r > 1.0) throw ConfigError("synthetic spec: defect rates must be in [0,1]");
    // train is calendar 2016, test 2017-2018; anything narrower cannot
    // reproduce the split
    if (days_from_civil(start) > days_from_civil(CivilDate{2016, 1, 1}) ||
        days_from_civil(end) < days_from_civil(CivilDate{2018, 12, 31}))
        throw ConfigError("synthetic spec: date range must cover 2016-01-01 .. 2018-12-31");
}

SyntheticSpec load_synthetic_spec(const std::string& json_path) {
    std::ifstream in(json_path);
    if (!in) throw ConfigError("missing synthetic spec file: " + json_path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("bad JSON in " + json_path + ": " + e.what());
    }
    SyntheticSpec s;
    try {
        if (j.value("schema_version", 1) != 1)
            throw ConfigError("unsupported schema_version in " + json_path);
        s.n_sites = j.value("n_sites", s.n_sites);
        s.buildings_per_site = j.value("buildings_per_site", s.buildings_per_site);
        if (j.contains("meter_probs")) {
            const auto& p = j["meter_probs"];
            s.p_chilledwater = p.value("chilledwater", 0.0);
            s.p_steam = p.value("steam", 0.0);
            s.p_hotwater = p.value("hotwater", 0.0);
        }
        if (j.contains("start")) {
            const auto d = parse_date(j["start"].get<std::string>());
            if (!d) throw ConfigError("bad start date");
            s.start = *d;
        }
        if (j.contains("end")) {
            const auto d = parse_date(j["end"].get<std::string>());
            if (!d) throw ConfigError("bad end date");
            s.end = *d;
        }
        s.seed = j.value("seed", s.seed);
        if (j.contains("defect_rates")) {
            const auto& d = j["defect_rates"];
            s.defect_rates.constant_streak = d.value("constant_streak", 0.0);
            s.defect_rates.missing_weather = d.value("missing_weather", 0.0);
            s.defect_rates.site_wide_zero = d.value("site_wide_zero", 0.0);
            s.defect_rates.unit_rescale = d.value("unit_rescale", 0.0);
            s.defect_rates.timezone_shift = d.value("timezone_shift", 0.0);
        }
    } catch (const json::exception& e) {
        throw ConfigError("bad synthetic spec " + json_path + ": " + e.what());
    }
    s.validate();
    return s;
}

std::vector<Record> SynthManifest::defects(const std::string& kind) const {
    std::vector<Record> out;
    for (const auto& r : records)
        if (r.kind == "defect" && (kind.empty() || r.get("kind") == kind)) out.push_back(r);
    return out;
}

const Record& SynthManifest::summary() const {
    for (const auto& r : records)
        if (r.kind == "summary") return r;
    throw DataError("manifest has no summary record");
}

void SynthManifest::write(const std::string& path) const { write_records(path, records); }

SynthManifest load_manifest(const std::string& path) { return SynthManifest{read_records(path)}; }

namespace {

constexpr double kTau = 6.283185307179586;

// Site climate: annual + diurnal sinusoid, diurnal peak at 14:00 local.
struct SiteClimate {
    double t_mean, a_annual, a_diurnal;
    double dew_spread;     // mean air - dew gap
    double pressure_phase;
};

struct HourlyWeather {
    double air, dew, cloud, precip, pressure, wind_dir, wind_speed;
};

SiteClimate make_climate(std::uint64_t seed, int site_id) {
    Rng rng(mix_seed(seed, 0x51, static_cast<std::uint64_t>(site_id)));
    SiteClimate c;
    c.t_mean = rng.uniform(8.0, 18.0);
    c.a_annual = rng.uniform(8.0, 14.0);
    c.a_diurnal = rng.uniform(4.0, 7.0);
    c.dew_spread = rng.uniform(2.0, 6.0);
    c.pressure_phase = rng.uniform(0.0, kTau);
    return c;
}

double smooth_temp(const SiteClimate& c, HourStamp h) {
    const std::int64_t day = day_of_hour(h);
    const CivilDate d = civil_from_days(day);
    const double doy = static_cast<double>(day - days_from_civil(CivilDate{d.year, 1, 1}));
    const double hod = static_cast<double>(hour_of_day(h));
    return c.t_mean + c.a_annual * std::cos(kTau * (doy - 197.0) / 365.25) +
           c.a_diurnal * std::cos(kTau * (hod - 14.0) / 24.0);
}

HourlyWeather make_weather(const SiteClimate& c, HourStamp h, Rng& rng) {
    HourlyWeather w;
    // sigma 0.5 degC sensor noise on temperature
    w.air = smooth_temp(c, h) + rng.normal(0.0, 0.5);
    w.dew = w.air - std::max(0.3, c.dew_spread + rng.normal(0.0, 1.0));
    w.cloud = std::clamp(std::floor(rng.uniform(0.0, 10.0)), 0.0, 9.0);
    w.precip = rng.uniform() < 0.1 ? std::floor(rng.uniform(0.0, 8.0)) : 0.0;
    w.pressure = 1013.0 + 8.0 * std::sin(kTau * static_cast<double>(day_of_hour(h)) / 365.25 +
                                         c.pressure_phase) +
                 rng.normal(0.0, 2.0);
    w.wind_dir = std::floor(rng.uniform(0.0, 360.0));
    w.wind_speed = std::abs(rng.normal(3.5, 2.0));
    return w;
}

struct BuildingProfile {
    double base, amp, cool, chilled, heat;
    double weekend_level;
};

// Weekday/hour occupancy in [0, 1].
double occupancy(int weekday, int hod, double weekend_level) {
    if (weekday >= 5) return weekend_level * (hod >= 10 && hod <= 16 ? 1.5 : 1.0);
    if (hod >= 9 && hod <= 17) return 1.0;
    if (hod == 7) return 0.4;
    if (hod == 8) return 0.75;
    if (hod == 18) return 0.7;
    if (hod == 19) return 0.4;
    if (hod == 20) return 0.25;
    return 0.12;
}

BuildingProfile make_profile(std::uint64_t seed, int building_id, double square_feet) {
    Rng rng(mix_seed(seed, 0xB1, static_cast<std::uint64_t>(building_id)));
    const double area_scale = std::pow(square_feet / 50000.0, 0.7);
    BuildingProfile p;
    p.base = rng.uniform(8.0, 25.0) * area_scale;
    p.amp = rng.uniform(20.0, 70.0) * area_scale;
    p.cool = rng.uniform(0.5, 2.0) * area_scale;
    p.chilled = rng.uniform(2.0, 5.0) * area_scale;
    p.heat = rng.uniform(2.0, 5.0) * area_scale;
    p.weekend_level = rng.uniform(0.15, 0.3);
    return p;
}

// Consumption before noise; strictly positive so that exact zeros only ever
// come from injected defects.
double signal(const BuildingProfile& p, MeterType m, double temp, int weekday, int hod) {
    const double occ = occupancy(weekday, hod, p.weekend_level);
    switch (m) {
        case MeterType::electricity:
            return p.base + p.amp * (0.25 + 0.75 * occ) +
                   p.cool * std::max(temp - 20.0, 0.0) * (0.3 + 0.7 * occ);
        case MeterType::chilledwater:
            return 0.15 * p.amp + p.chilled * std::pow(std::max(temp - 16.0, 0.0), 1.2) *
                                      (0.4 + 0.6 * occ);
        case MeterType::steam:
            return 0.18 * p.amp +
                   p.heat * std::pow(std::max(14.0 - temp, 0.0), 1.2) * (0.5 + 0.5 * occ);
        case MeterType::hotwater:
            return 0.12 * p.amp +
                   0.8 * p.heat * std::pow(std::max(14.0 - temp, 0.0), 1.1) * (0.4 + 0.6 * occ);
    }
    return p.base;
}

const char* kPrimaryUses[] = {"Education", "Office", "Lodging/residential",
                              "Entertainment/public assembly", "Public services", "Healthcare"};

} // namespace

SynthManifest generate_synthetic(const SyntheticSpec& spec, const std::string& out_dir) {
    spec.validate();
    fs::create_directories(out_dir);

    const HourStamp train_lo = hour_from_civil(2016, 1, 1, 0);
    const HourStamp train_hi = hour_from_civil(2016, 12, 31, 23);
    const HourStamp test_lo = hour_from_civil(2017, 1, 1, 0);
    const HourStamp test_hi = hour_from_civil(2018, 12, 31, 23);
    const int n_train_hours = static_cast<int>(train_hi - train_lo + 1);

    SynthManifest manifest;
    std::vector<Record> defects;

    // --- buildings and their meter sets ---
    std::vector<BuildingMeta> buildings;
    std::map<int, std::vector<MeterType>> meters_of; // building -> meters
    int next_building = 0;
    for (int site = 0; site < spec.n_sites; ++site) {
        for (int b = 0; b < spec.buildings_per_site; ++b) {
            const int id = next_building++;
            Rng rng(mix_seed(spec.seed, 0x3E7A, static_cast<std::uint64_t>(id)));
            BuildingMeta meta;
            meta.site_id = site;
            meta.building_id = id;
            meta.primary_use =
                kPrimaryUses[rng.uniform_int(sizeof(kPrimaryUses) / sizeof(kPrimaryUses[0]))];
            meta.square_feet = std::floor(std::exp(rng.uniform(std::log(20000.0), std::log(200000.0))));
            if (rng.uniform() < 0.8) meta.year_built = 1900 + static_cast<int>(rng.uniform_int(118));
            if (rng.uniform() < 0.6) meta.floor_count = 1 + static_cast<int>(rng.uniform_int(12));
            buildings.push_back(meta);
            std::vector<MeterType> meters{MeterType::electricity};
            if (rng.bernoulli(spec.p_chilledwater)) meters.push_back(MeterType::chilledwater);
            if (rng.bernoulli(spec.p_steam)) meters.push_back(MeterType::steam);
            if (rng.bernoulli(spec.p_hotwater)) meters.push_back(MeterType::hotwater);
            meters_of[id] = meters;
        }
    }

    // --- per-site defect decisions ---
    std::map<int, int> tz_offset_of;     // site -> correction offset the estimator should report
    std::map<int, bool> rescale_site;
    std::map<int, std::pair<MeterType, std::pair<HourStamp, HourStamp>>> outage_of;
    int tz_count = 0;
    for (int site = 0; site < spec.n_sites; ++site) {
        Rng rng(mix_seed(spec.seed, 0xDEF1, static_cast<std::uint64_t>(site)));
        if (rng.bernoulli(spec.defect_rates.timezone_shift)) {
            // sweep -12..11 so a full-rate run covers every canonical offset
            tz_offset_of[site] = (tz_count % 24) - 12;
            ++tz_count;
        }
        rescale_site[site] = rng.bernoulli(spec.defect_rates.unit_rescale);
        if (rng.bernoulli(spec.defect_rates.site_wide_zero)) {
            // pick a meter type with >= 2 meters at this site
            std::map<MeterType, int> counts;
            for (const auto& b : buildings)
                if (b.site_id == site)
                    for (const MeterType m : meters_of[b.building_id]) counts[m]++;
            MeterType chosen = MeterType::electricity;
            bool found = false;
            for (const auto& [m, n] : counts) {
                if (n >= 2) {
                    chosen = m;
                    found = true;
                    break;
                }
            }
            if (found) {
                const int len = 12 + static_cast<int>(rng.uniform_int(37)); // 12..48 h
                const HourStamp start =
                    train_lo + 24 * 7 +
                    static_cast<HourStamp>(rng.uniform_int(
                        static_cast<std::uint64_t>(n_train_hours - len - 24 * 14)));
                outage_of[site] = {chosen, {start, start + len - 1}};
            }
        }
    }

    // --- readings (train) and ground truth (test) ---
    std::vector<MeterReading> train;
    std::vector<TestRow> test_rows;
    std::vector<double> truth;
    std::map<int, SiteClimate> climate;
    for (int site = 0; site < spec.n_sites; ++site) climate[site] = make_climate(spec.seed, site);

    for (const auto& meta : buildings) {
        const SiteClimate& cli = climate[meta.site_id];
        const BuildingProfile prof = make_profile(spec.seed, meta.building_id, meta.square_feet);
        for (const MeterType m : meters_of[meta.building_id]) {
            Rng rng(mix_seed(spec.seed, 0x4EAD, static_cast<std::uint64_t>(meta.building_id),
                             static_cast<std::uint64_t>(m)));
            std::vector<double> values(static_cast<std::size_t>(test_hi - train_lo + 1));
            for (HourStamp h = train_lo; h <= test_hi; ++h) {
                // readings respond to the smooth local temperature plus
                // their own sensor-level noise
                const double temp = smooth_temp(cli, h) + rng.normal(0.0, 0.4);
                const double v = signal(prof, m, temp, weekday_of_hour(h), hour_of_day(h)) *
                                 std::exp(rng.normal(0.0, 0.06));
                values[static_cast<std::size_t>(h - train_lo)] = v;
            }
            const bool rescaled = rescale_site[meta.site_id] && m == MeterType::electricity;
            // constant-streak defect (train year only)
            Rng drng(mix_seed(spec.seed, 0x57EA, static_cast<std::uint64_t>(meta.building_id),
                              static_cast<std::uint64_t>(m)));
            if (drng.bernoulli(spec.defect_rates.constant_streak)) {
                const auto outage_iv = outage_of.find(meta.site_id);
                int len = 0, start_idx = -1;
                for (int attempt = 0; attempt < 32 && start_idx < 0; ++attempt) {
                    len = 64 + static_cast<int>(drng.uniform_int(104)); // 64..167 h
                    const int cand =
                        24 * 10 + static_cast<int>(drng.uniform_int(
                                      static_cast<std::uint64_t>(n_train_hours - len - 24 * 20)));
                    // keep clear of an injected outage so neither defect
                    // overwrites the other
                    if (outage_iv != outage_of.end() && outage_iv->second.first == m) {
                        const auto [o_start, o_end] = outage_iv->second.second;
                        const HourStamp c_start = train_lo + cand, c_end = train_lo + cand + len - 1;
                        if (c_start <= o_end + 1 && c_end >= o_start - 1) continue;
                    }
                    start_idx = cand;
                }
                if (start_idx >= 0) {
                    const double frozen = values[static_cast<std::size_t>(start_idx)];
                    for (int i = 0; i < len; ++i)
                        values[static_cast<std::size_t>(start_idx + i)] = frozen;
                    Record r;
                    r.kind = "defect";
                    r.set("kind", "constant_streak").set_int("building", meta.building_id);
                    r.set_int("meter", static_cast<int>(m));
                    r.set("start", format_hour_compact(train_lo + start_idx));
                    r.set("end", format_hour_compact(train_lo + start_idx + len - 1));
                    r.set_int("rows", len);
                    r.set_double("value", rescaled ? frozen / kKbtuToKwh : frozen);
                    defects.push_back(std::move(r));
                }
            }
            // site-wide outage
            const auto outage = outage_of.find(meta.site_id);
            if (outage != outage_of.end() && outage->second.first == m) {
                const auto [o_start, o_end] = outage->second.second;
                for (HourStamp h = o_start; h <= o_end; ++h)
                    values[static_cast<std::size_t>(h - train_lo)] = 0.0;
            }
            // unit misscaling: this site's electricity train data arrives in kBTU
            for (HourStamp h = train_lo; h <= train_hi; ++h) {
                double v = values[static_cast<std::size_t>(h - train_lo)];
                if (rescaled) v /= kKbtuToKwh;
                train.push_back({meta.building_id, m, h, v});
            }
            for (HourStamp h = test_lo; h <= test_hi; ++h) {
                test_rows.push_back({0, meta.building_id, m, h});
                truth.push_back(values[static_cast<std::size_t>(h - train_lo)]);
            }
        }
    }

    // defect records that span whole sites
    for (int site = 0; site < spec.n_sites; ++site) {
        if (rescale_site[site]) {
            std::int64_t n = 0;
            for (const auto& r : train) {
                if (r.meter != MeterType::electricity) continue;
                // building -> site lookup
                if (buildings[static_cast<std::size_t>(r.building_id)].site_id == site) ++n;
            }
            if (n > 0) {
                Record r;
                r.kind = "defect";
                r.set("kind", "unit_rescale").set_int("site", site);
                r.set_double("factor", kKbtuToKwh).set_int("rows", n);
                defects.push_back(std::move(r));
            }
        }
        const auto it = outage_of.find(site);
        if (it != outage_of.end()) {
            const auto [m, interval] = it->second;
            std::int64_t rows = 0;
            for (const auto& b : buildings)
                if (b.site_id == site)
                    for (const MeterType bm : meters_of[b.building_id])
                        if (bm == m) rows += interval.second - interval.first + 1;
            Record r;
            r.kind = "defect";
            r.set("kind", "site_wide_zero").set_int("site", site).set_int("meter", static_cast<int>(m));
            r.set("start", format_hour_compact(interval.first));
            r.set("end", format_hour_compact(interval.second));
            r.set_int("rows", rows);
            defects.push_back(std::move(r));
        }
        const auto tz = tz_offset_of.find(site);
        if (tz != tz_offset_of.end()) {
            Record r;
            r.kind = "defect";
            r.set("kind", "timezone_shift").set_int("site", site).set_int("offset", tz->second);
            defects.push_back(std::move(r));
        }
    }

    // --- weather, with timezone shift and missing-cell defects ---
    // generated with margin so a shifted site still covers the full range
    std::vector<WeatherRecord> weather_train, weather_test;
    for (int site = 0; site < spec.n_sites; ++site) {
        const SiteClimate& cli = climate[site];
        Rng rng(mix_seed(spec.seed, 0x6EA7, static_cast<std::uint64_t>(site)));
        Rng gap_rng(mix_seed(spec.seed, 0x9A9, static_cast<std::uint64_t>(site)));
        const int offset = tz_offset_of.count(site) ? tz_offset_of[site] : 0;
        // one long air-temperature gap per site when the defect is active,
        // to exercise climatology fill
        HourStamp gap_start = 0, gap_end = -1;
        if (spec.defect_rates.missing_weather > 0.0 && gap_rng.bernoulli(0.5)) {
            const int gap_len = 24 * 7 + static_cast<int>(gap_rng.uniform_int(24 * 23)); // 7..30 d
            gap_start = train_lo + 24 * 40 + static_cast<HourStamp>(gap_rng.uniform_int(24 * 200));
            gap_end = gap_start + gap_len - 1;
        }
        std::int64_t missing_cells = 0;
        for (HourStamp local = train_lo - 24; local <= test_hi + 24; ++local) {
            const HourlyWeather w = make_weather(cli, local, rng);
            const HourStamp file_ts = local - offset;
            if (file_ts < train_lo || file_ts > test_hi) continue;
            WeatherRecord rec;
            rec.site_id = site;
            rec.ts = file_ts;
            rec.air_temperature = w.air;
            rec.cloud_coverage = w.cloud;
            rec.dew_temperature = w.dew;
            rec.precip_depth_1_hr = w.precip;
            rec.sea_level_pressure = w.pressure;
            rec.wind_direction = w.wind_dir;
            rec.wind_speed = w.wind_speed;
            if (file_ts >= gap_start && file_ts <= gap_end) {
                rec.air_temperature.reset();
                ++missing_cells;
            }
            auto knock = [&](std::optional<double>& cell) {
                if (cell && rng.bernoulli(spec.defect_rates.missing_weather)) {
                    cell.reset();
                    ++missing_cells;
                }
            };
            knock(rec.air_temperature);
            knock(rec.cloud_coverage);
            knock(rec.dew_temperature);
            knock(rec.precip_depth_1_hr);
            knock(rec.sea_level_pressure);
            knock(rec.wind_direction);
            knock(rec.wind_speed);
            (rec.ts <= train_hi ? weather_train : weather_test).push_back(std::move(rec));
        }
        if (missing_cells > 0) {
            Record r;
            r.kind = "defect";
            r.set("kind", "missing_weather").set_int("site", site).set_int("cells", missing_cells);
            defects.push_back(std::move(r));
        }
    }

    // --- assign dense row ids and write everything ---
    {
        std::vector<std::size_t> order(test_rows.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            const TestRow &ra = test_rows[a], &rb = test_rows[b];
            if (ra.building_id != rb.building_id) return ra.building_id < rb.building_id;
            if (ra.meter != rb.meter) return ra.meter < rb.meter;
            return ra.ts < rb.ts;
        });
        std::vector<TestRow> sorted_rows(test_rows.size());
        std::vector<double> sorted_truth(truth.size());
        for (std::size_t i = 0; i < order.size(); ++i) {
            sorted_rows[i] = test_rows[order[i]];
            sorted_rows[i].row_id = static_cast<std::int64_t>(i);
            sorted_truth[i] = truth[order[i]];
        }
        test_rows = std::move(sorted_rows);
        truth = std::move(sorted_truth);
    }

    sort_readings(train);
    sort_weather(weather_train);
    sort_weather(weather_test);

    const fs::path dir(out_dir);
    write_readings_csv((dir / "train.csv").string(), train);
    write_building_meta_csv((dir / "building_meta.csv").string(), buildings);
    write_weather_csv((dir / "weather_train.csv").string(), weather_train);
    write_weather_csv((dir / "weather_test.csv").string(), weather_test);
    write_test_rows_csv((dir / "test.csv").string(), test_rows);
    write_prediction_csv((dir / "ground_truth.csv").string(), truth);

    std::size_t n_meters = 0;
    for (const auto& [b, ms] : meters_of) n_meters += ms.size();

    for (const char* name : {"train.csv", "building_meta.csv", "weather_train.csv",
                             "weather_test.csv", "test.csv", "ground_truth.csv"}) {
        Record r;
        r.kind = "file";
        r.set("name", name);
        r.set("sha256", sha256_file_hex((dir / name).string()));
        manifest.records.push_back(std::move(r));
    }
    for (auto& d : defects) manifest.records.push_back(std::move(d));
    Record s;
    s.kind = "summary";
    s.set_int("sites", spec.n_sites);
    s.set_int("buildings", static_cast<std::int64_t>(buildings.size()));
    s.set_int("meters", static_cast<std::int64_t>(n_meters));
    s.set_int("train_rows", static_cast<std::int64_t>(train.size()));
    s.set_int("test_rows", static_cast<std::int64_t>(test_rows.size()));
    s.set_int("defects", static_cast<std::int64_t>(manifest.defects().size()));
    s.set_int("seed", static_cast<std::int64_t>(spec.seed));
    manifest.records.push_back(std::move(s));
    manifest.write((dir / "manifest.txt").string());
    return manifest;
}

} // namespace meterbench
