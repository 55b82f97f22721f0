#pragma once

#include <optional>
#include <string>
#include <vector>

#include "meterbench/dataset.hpp"

namespace meterbench {

// Inclusive hour interval on one (building, meter) series.
struct ReadingInterval {
    int building_id;
    MeterType meter;
    HourStamp start;
    HourStamp end; // inclusive
};

struct SiteZeroInterval {
    int site_id;
    MeterType meter;
    HourStamp start;
    HourStamp end;      // inclusive
    std::size_t rows;   // zero readings inside the interval
};

enum class RuleKind {
    constant_streak,
    zero_streak,
    site_wide_zero,
    unit_rescale,
    manual_exclusion,
};

const char* rule_kind_name(RuleKind k);
std::optional<RuleKind> rule_kind_from_name(std::string_view name);

// Optional (site, building, meter) filter; unset members match anything.
struct RuleScope {
    std::optional<int> site_id;
    std::optional<int> building_id;
    std::optional<MeterType> meter;
};

struct CleaningRule {
    RuleKind kind;
    RuleScope scope;
    int min_len = 0;           // constant_streak / zero_streak / site_wide_zero
    double min_fraction = 0.0; // site_wide_zero
    double factor = 1.0;       // unit_rescale
    std::vector<ReadingInterval> exclusions; // manual_exclusion

    void validate() const; // throws ConfigError
};

// Shipped defaults; "long streaks" has no published threshold, so these are
// config-overridable.
CleaningRule default_constant_streak_rule(); // min_len = 48
CleaningRule default_zero_streak_rule();     // min_len = 24
CleaningRule default_site_wide_zero_rule();  // min_fraction = 0.3, min_len = 6

struct CleaningReport {
    struct RuleStats {
        std::string rule;
        std::size_t rows_dropped = 0;
        std::size_t rows_rescaled = 0;
    };
    std::vector<RuleStats> per_rule;
    std::vector<ReadingInterval> removed_intervals;
    std::size_t rows_in = 0;
    std::size_t rows_out = 0;

    std::size_t rows_dropped() const { return rows_in - rows_out; }
    void write(const std::string& path) const;
};

// Maximal runs of identical consecutive hourly values with length >=
// min_len; runs are broken by gaps in the timestamps. `series` must be one
// (building, meter) group sorted by timestamp.
std::vector<ReadingInterval> find_constant_streaks(const std::vector<MeterReading>& series,
                                                   int min_len);

// Same, restricted to runs of exact zeros.
std::vector<ReadingInterval> find_zero_streaks(const std::vector<MeterReading>& series,
                                               int min_len);

// Intervals of >= min_len consecutive hours where at least min_fraction of
// a site's meters of one type read exactly zero. Sites with fewer than two
// meters of a type are skipped. `readings` sorted by (building, meter, ts).
std::vector<SiteZeroInterval> find_site_wide_zeros(const std::vector<MeterReading>& readings,
                                                   const std::vector<BuildingMeta>& buildings,
                                                   double min_fraction, int min_len);

// Applies rules in declared order. Dropping is idempotent: a second pass
// over the output removes nothing. Conflicting unit_rescale rules whose
// scopes can overlap are a fatal config error.
std::pair<std::vector<MeterReading>, CleaningReport> apply_cleaning(
    std::vector<MeterReading> readings, const std::vector<BuildingMeta>& buildings,
    const std::vector<CleaningRule>& rules);

} // namespace meterbench
