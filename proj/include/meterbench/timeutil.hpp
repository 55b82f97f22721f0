#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace meterbench {

// All timestamps in the data model are naive wall-clock times (no zone).
// Hour-aligned series use HourStamp = hours since 1970-01-01 00:00.
using HourStamp = std::int64_t;

struct CivilDate {
    int year;
    int month; // 1..12
    int day;   // 1..31
};

struct CivilDateTime {
    CivilDate date;
    int hour;   // 0..23
    int minute; // 0..59
    int second; // 0..59
};

// Days since 1970-01-01 for a proleptic Gregorian civil date, and back.
std::int64_t days_from_civil(const CivilDate& d);
CivilDate civil_from_days(std::int64_t days);

// 0 = Monday .. 6 = Sunday.
int weekday_from_days(std::int64_t days);

inline std::int64_t day_of_hour(HourStamp h) {
    // floor division; hours before the epoch belong to the previous day
    return (h >= 0) ? h / 24 : -((-h + 23) / 24);
}
inline int hour_of_day(HourStamp h) {
    const std::int64_t r = h - day_of_hour(h) * 24;
    return static_cast<int>(r);
}
inline int weekday_of_hour(HourStamp h) { return weekday_from_days(day_of_hour(h)); }

CivilDateTime civil_from_hour(HourStamp h);
inline int year_of_hour(HourStamp h) { return civil_from_hour(h).date.year; }
inline int month_of_hour(HourStamp h) { return civil_from_hour(h).date.month; }

HourStamp hour_from_civil(int year, int month, int day, int hour);

// "YYYY-MM-DD HH:MM:SS" (also accepts a 'T' separator and a date-only form,
// which reads as midnight). Returns nullopt on any malformed input.
std::optional<CivilDateTime> parse_datetime(std::string_view s);

// Hour-aligned parse: minute and second must be zero.
std::optional<HourStamp> parse_hour(std::string_view s);

// Date-only parse of "YYYY-MM-DD".
std::optional<CivilDate> parse_date(std::string_view s);

std::string format_hour(HourStamp h);            // "YYYY-MM-DD HH:00:00"
std::string format_hour_compact(HourStamp h);    // "YYYY-MM-DDTHH:00:00" (manifest records)
std::string format_date(const CivilDate& d);     // "YYYY-MM-DD"

// UTC calendar day index for submission-rate accounting (timestamps are
// seconds since epoch there, not hours).
inline std::int64_t utc_day_of_second(std::int64_t sec) {
    return (sec >= 0) ? sec / 86400 : -((-sec + 86399) / 86400);
}

} // namespace meterbench
