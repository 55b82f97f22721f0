#include "meterbench/preprocess.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "meterbench/error.hpp"
#include "meterbench/records.hpp"

namespace meterbench {

const char* rule_kind_name(RuleKind k) {
    switch (k) {
        case RuleKind::constant_streak: return "constant_streak";
        case RuleKind::zero_streak: return "zero_streak";
        case RuleKind::site_wide_zero: return "site_wide_zero";
        case RuleKind::unit_rescale: return "unit_rescale";
        case RuleKind::manual_exclusion: return "manual_exclusion";
    }
    return "?";
}

std::optional<RuleKind> rule_kind_from_name(std::string_view name) {
    for (const RuleKind k : {RuleKind::constant_streak, RuleKind::zero_streak,
                             RuleKind::site_wide_zero, RuleKind::unit_rescale,
                             RuleKind::manual_exclusion})
        if (name == rule_kind_name(k)) return k;
    return std::nullopt;
}

void CleaningRule::validate() const {
    switch (kind) {
        case RuleKind::constant_streak:
        case RuleKind::zero_streak:
            if (min_len < 2) throw ConfigError("streak rule: min_len must be >= 2");
            break;
        case RuleKind::site_wide_zero:
            if (min_len < 1) throw ConfigError("site_wide_zero: min_len must be >= 1");
            if (!(min_fraction > 0.0) || min_fraction > 1.0)
                throw ConfigError("site_wide_zero: min_fraction must be in (0,1]");
            break;
        case RuleKind::unit_rescale:
            if (!(factor > 0.0)) throw ConfigError("unit_rescale: factor must be > 0");
            break;
        case RuleKind::manual_exclusion:
            for (const auto& iv : exclusions)
                if (iv.end < iv.start) throw ConfigError("manual_exclusion: interval end before start");
            break;
    }
}

CleaningRule default_constant_streak_rule() {
    CleaningRule r;
    r.kind = RuleKind::constant_streak;
    r.min_len = 48;
    return r;
}

CleaningRule default_zero_streak_rule() {
    CleaningRule r;
    r.kind = RuleKind::zero_streak;
    r.min_len = 24;
    return r;
}

CleaningRule default_site_wide_zero_rule() {
    CleaningRule r;
    r.kind = RuleKind::site_wide_zero;
    r.min_fraction = 0.3;
    r.min_len = 6;
    return r;
}

void CleaningReport::write(const std::string& path) const {
    std::vector<Record> recs;
    for (const auto& s : per_rule) {
        Record r;
        r.kind = "rule";
        r.set("name", s.rule);
        r.set_int("rows_dropped", static_cast<std::int64_t>(s.rows_dropped));
        r.set_int("rows_rescaled", static_cast<std::int64_t>(s.rows_rescaled));
        recs.push_back(std::move(r));
    }
    for (const auto& iv : removed_intervals) {
        Record r;
        r.kind = "removed";
        r.set_int("building", iv.building_id).set_int("meter", static_cast<int>(iv.meter));
        r.set("start", format_hour_compact(iv.start)).set("end", format_hour_compact(iv.end));
        recs.push_back(std::move(r));
    }
    Record s;
    s.kind = "summary";
    s.set_int("rows_in", static_cast<std::int64_t>(rows_in));
    s.set_int("rows_out", static_cast<std::int64_t>(rows_out));
    s.set_int("rows_dropped", static_cast<std::int64_t>(rows_dropped()));
    recs.push_back(std::move(s));
    write_records(path, recs);
}

namespace {

template <typename Pred>
std::vector<ReadingInterval> find_runs(const std::vector<MeterReading>& series, int min_len,
                                       Pred same_run) {
    std::vector<ReadingInterval> out;
    std::size_t i = 0;
    while (i < series.size()) {
        if (!same_run(series[i], series[i])) { // row not eligible at all
            ++i;
            continue;
        }
        std::size_t j = i + 1;
        while (j < series.size() && series[j].ts == series[j - 1].ts + 1 &&
               same_run(series[i], series[j]))
            ++j;
        const auto len = static_cast<int>(j - i);
        if (len >= min_len)
            out.push_back({series[i].building_id, series[i].meter, series[i].ts,
                           series[j - 1].ts});
        i = j;
    }
    return out;
}

} // namespace

std::vector<ReadingInterval> find_constant_streaks(const std::vector<MeterReading>& series,
                                                   int min_len) {
    return find_runs(series, min_len,
                     [](const MeterReading& a, const MeterReading& b) { return a.value == b.value; });
}

std::vector<ReadingInterval> find_zero_streaks(const std::vector<MeterReading>& series, int min_len) {
    return find_runs(series, min_len, [](const MeterReading& a, const MeterReading& b) {
        return a.value == 0.0 && b.value == 0.0;
    });
}

namespace {

std::map<int, int> site_of_building(const std::vector<BuildingMeta>& buildings) {
    std::map<int, int> m;
    for (const auto& b : buildings) m[b.building_id] = b.site_id;
    return m;
}

} // namespace

std::vector<SiteZeroInterval> find_site_wide_zeros(const std::vector<MeterReading>& readings,
                                                   const std::vector<BuildingMeta>& buildings,
                                                   double min_fraction, int min_len) {
    const auto site_of = site_of_building(buildings);
    // (site, meter) -> hour -> (zero meters, reporting meters)
    std::map<std::pair<int, int>, std::map<HourStamp, std::pair<int, int>>> tally;
    std::map<std::pair<int, int>, std::set<int>> meters_at_site;
    for (const auto& r : readings) {
        const auto site_it = site_of.find(r.building_id);
        if (site_it == site_of.end()) continue;
        const std::pair<int, int> key{site_it->second, static_cast<int>(r.meter)};
        meters_at_site[key].insert(r.building_id);
        auto& cell = tally[key][r.ts];
        cell.second += 1;
        if (r.value == 0.0) cell.first += 1;
    }
    std::vector<SiteZeroInterval> out;
    for (const auto& [key, hours] : tally) {
        if (meters_at_site[key].size() < 2) continue; // rule needs >= 2 meters of the type
        auto it = hours.begin();
        while (it != hours.end()) {
            auto qualifies = [&](const std::pair<const HourStamp, std::pair<int, int>>& e) {
                return e.second.second >= 2 &&
                       static_cast<double>(e.second.first) >=
                           min_fraction * static_cast<double>(e.second.second);
            };
            if (!qualifies(*it) || it->second.first == 0) {
                ++it;
                continue;
            }
            auto run_end = it;
            std::size_t zero_rows = it->second.first;
            auto next = std::next(it);
            while (next != hours.end() && next->first == run_end->first + 1 && qualifies(*next) &&
                   next->second.first > 0) {
                zero_rows += next->second.first;
                run_end = next;
                ++next;
            }
            const int len = static_cast<int>(run_end->first - it->first + 1);
            if (len >= min_len)
                out.push_back({key.first, static_cast<MeterType>(key.second), it->first,
                               run_end->first, zero_rows});
            it = next;
        }
    }
    return out;
}

namespace {

bool scope_matches(const RuleScope& s, const MeterReading& r, const std::map<int, int>& site_of) {
    if (s.building_id && *s.building_id != r.building_id) return false;
    if (s.meter && *s.meter != r.meter) return false;
    if (s.site_id) {
        const auto it = site_of.find(r.building_id);
        if (it == site_of.end() || it->second != *s.site_id) return false;
    }
    return true;
}

// Two scopes can both match some reading unless a shared constraint
// disagrees (building -> site resolved through the metadata).
bool scopes_can_overlap(const RuleScope& a, const RuleScope& b, const std::map<int, int>& site_of) {
    if (a.meter && b.meter && *a.meter != *b.meter) return false;
    if (a.building_id && b.building_id && *a.building_id != *b.building_id) return false;
    if (a.site_id && b.site_id && *a.site_id != *b.site_id) return false;
    auto site_of_scope = [&](const RuleScope& s) -> std::optional<int> {
        if (!s.building_id) return std::nullopt;
        const auto it = site_of.find(*s.building_id);
        return it == site_of.end() ? std::nullopt : std::optional<int>(it->second);
    };
    if (a.site_id && b.building_id) {
        const auto bs = site_of_scope(b);
        if (bs && *bs != *a.site_id) return false;
    }
    if (b.site_id && a.building_id) {
        const auto as = site_of_scope(a);
        if (as && *as != *b.site_id) return false;
    }
    return true;
}

} // namespace

std::pair<std::vector<MeterReading>, CleaningReport> apply_cleaning(
    std::vector<MeterReading> readings, const std::vector<BuildingMeta>& buildings,
    const std::vector<CleaningRule>& rules) {
    const auto site_of = site_of_building(buildings);
    for (const auto& r : rules) r.validate();
    for (std::size_t i = 0; i < rules.size(); ++i) {
        if (rules[i].kind != RuleKind::unit_rescale) continue;
        for (std::size_t j = i + 1; j < rules.size(); ++j) {
            if (rules[j].kind != RuleKind::unit_rescale) continue;
            if (scopes_can_overlap(rules[i].scope, rules[j].scope, site_of))
                throw ConfigError("conflicting unit_rescale rules: scopes of rules " +
                                  std::to_string(i) + " and " + std::to_string(j) + " overlap");
        }
    }

    CleaningReport report;
    report.rows_in = readings.size();
    sort_readings(readings);

    for (const auto& rule : rules) {
        CleaningReport::RuleStats stats;
        stats.rule = rule_kind_name(rule.kind);
        std::vector<char> drop(readings.size(), 0);

        if (rule.kind == RuleKind::unit_rescale) {
            for (auto& r : readings) {
                if (scope_matches(rule.scope, r, site_of)) {
                    r.value *= rule.factor;
                    ++stats.rows_rescaled;
                }
            }
        } else if (rule.kind == RuleKind::manual_exclusion) {
            for (std::size_t i = 0; i < readings.size(); ++i) {
                const auto& r = readings[i];
                if (!scope_matches(rule.scope, r, site_of)) continue;
                for (const auto& iv : rule.exclusions) {
                    if (r.building_id == iv.building_id && r.meter == iv.meter &&
                        r.ts >= iv.start && r.ts <= iv.end) {
                        drop[i] = 1;
                        break;
                    }
                }
            }
            for (const auto& iv : rule.exclusions) report.removed_intervals.push_back(iv);
        } else if (rule.kind == RuleKind::constant_streak || rule.kind == RuleKind::zero_streak) {
            // scan scoped rows group by group; series are contiguous after sort
            std::size_t i = 0;
            while (i < readings.size()) {
                std::size_t j = i;
                while (j < readings.size() && readings[j].building_id == readings[i].building_id &&
                       readings[j].meter == readings[i].meter)
                    ++j;
                std::vector<MeterReading> series;
                std::vector<std::size_t> positions;
                for (std::size_t k = i; k < j; ++k) {
                    if (scope_matches(rule.scope, readings[k], site_of)) {
                        series.push_back(readings[k]);
                        positions.push_back(k);
                    }
                }
                const auto intervals = rule.kind == RuleKind::constant_streak
                                           ? find_constant_streaks(series, rule.min_len)
                                           : find_zero_streaks(series, rule.min_len);
                std::size_t cursor = 0;
                for (const auto& iv : intervals) {
                    report.removed_intervals.push_back(iv);
                    while (cursor < series.size() && series[cursor].ts < iv.start) ++cursor;
                    while (cursor < series.size() && series[cursor].ts <= iv.end)
                        drop[positions[cursor++]] = 1;
                }
                i = j;
            }
        } else { // site_wide_zero
            std::vector<MeterReading> scoped;
            scoped.reserve(readings.size());
            for (const auto& r : readings)
                if (scope_matches(rule.scope, r, site_of)) scoped.push_back(r);
            const auto intervals =
                find_site_wide_zeros(scoped, buildings, rule.min_fraction, rule.min_len);
            for (const auto& iv : intervals) {
                std::set<int> affected;
                for (std::size_t k = 0; k < readings.size(); ++k) {
                    const auto& r = readings[k];
                    if (r.meter != iv.meter || r.value != 0.0 || r.ts < iv.start || r.ts > iv.end)
                        continue;
                    const auto it = site_of.find(r.building_id);
                    if (it != site_of.end() && it->second == iv.site_id &&
                        scope_matches(rule.scope, r, site_of)) {
                        drop[k] = 1;
                        affected.insert(r.building_id);
                    }
                }
                for (const int b : affected)
                    report.removed_intervals.push_back({b, iv.meter, iv.start, iv.end});
            }
        }

        if (std::count(drop.begin(), drop.end(), 1) > 0) {
            std::vector<MeterReading> kept;
            kept.reserve(readings.size());
            for (std::size_t k = 0; k < readings.size(); ++k) {
                if (drop[k])
                    ++stats.rows_dropped;
                else
                    kept.push_back(readings[k]);
            }
            readings = std::move(kept);
        }
        report.per_rule.push_back(std::move(stats));
    }

    report.rows_out = readings.size();
    return {std::move(readings), std::move(report)};
}

} // namespace meterbench
