#include "meterbench/timeutil.hpp"

#include <charconv>
#include <cstdio>

namespace meterbench {

// Low-level civil calendar arithmetic after Howard Hinnant's public-domain
// chrono date algorithms.
std::int64_t days_from_civil(const CivilDate& d) {
    const int y = d.year - (d.month <= 2);
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const unsigned yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153u * (d.month + (d.month > 2 ? -3 : 9)) + 2) / 5 + d.day - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

CivilDate civil_from_days(std::int64_t z) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const unsigned doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    const unsigned day = doy - (153 * mp + 2) / 5 + 1;
    const unsigned month = mp + (mp < 10 ? 3 : -9);
    return CivilDate{static_cast<int>(y + (month <= 2)), static_cast<int>(month), static_cast<int>(day)};
}

int weekday_from_days(std::int64_t z) {
    // 1970-01-01 was a Thursday (=3 with Monday=0)
    return static_cast<int>(z >= -3 ? (z + 3) % 7 : (z + 4) % 7 + 6);
}

CivilDateTime civil_from_hour(HourStamp h) {
    const std::int64_t day = day_of_hour(h);
    return CivilDateTime{civil_from_days(day), hour_of_day(h), 0, 0};
}

HourStamp hour_from_civil(int year, int month, int day, int hour) {
    return days_from_civil(CivilDate{year, month, day}) * 24 + hour;
}

namespace {

bool parse_fixed_int(std::string_view s, std::size_t pos, std::size_t len, int& out) {
    if (pos + len > s.size()) return false;
    int v = 0;
    for (std::size_t i = 0; i < len; ++i) {
        const char c = s[pos + i];
        if (c < '0' || c > '9') return false;
        v = v * 10 + (c - '0');
    }
    out = v;
    return true;
}

bool valid_date(const CivilDate& d) {
    if (d.month < 1 || d.month > 12 || d.day < 1) return false;
    static const int mdays[12] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
    int dim = mdays[d.month - 1];
    const bool leap = (d.year % 4 == 0 && d.year % 100 != 0) || d.year % 400 == 0;
    if (d.month == 2 && leap) dim = 29;
    return d.day <= dim;
}

} // namespace

std::optional<CivilDateTime> parse_datetime(std::string_view s) {
    CivilDateTime dt{};
    if (s.size() != 10 && s.size() != 19) return std::nullopt;
    if (!parse_fixed_int(s, 0, 4, dt.date.year) || s[4] != '-' ||
        !parse_fixed_int(s, 5, 2, dt.date.month) || s[7] != '-' ||
        !parse_fixed_int(s, 8, 2, dt.date.day))
        return std::nullopt;
    if (!valid_date(dt.date)) return std::nullopt;
    if (s.size() == 10) return dt;
    if (s[10] != ' ' && s[10] != 'T') return std::nullopt;
    if (!parse_fixed_int(s, 11, 2, dt.hour) || s[13] != ':' ||
        !parse_fixed_int(s, 14, 2, dt.minute) || s[16] != ':' ||
        !parse_fixed_int(s, 17, 2, dt.second))
        return std::nullopt;
    if (dt.hour > 23 || dt.minute > 59 || dt.second > 59) return std::nullopt;
    return dt;
}

std::optional<HourStamp> parse_hour(std::string_view s) {
    const auto dt = parse_datetime(s);
    if (!dt || dt->minute != 0 || dt->second != 0) return std::nullopt;
    return days_from_civil(dt->date) * 24 + dt->hour;
}

std::optional<CivilDate> parse_date(std::string_view s) {
    if (s.size() != 10) return std::nullopt;
    const auto dt = parse_datetime(s);
    if (!dt) return std::nullopt;
    return dt->date;
}

std::string format_hour(HourStamp h) {
    const CivilDateTime dt = civil_from_hour(h);
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d %02d:00:00", dt.date.year, dt.date.month,
                  dt.date.day, dt.hour);
    return buf;
}

std::string format_hour_compact(HourStamp h) {
    std::string s = format_hour(h);
    s[10] = 'T';
    return s;
}

std::string format_date(const CivilDate& d) {
    char buf[12];
    std::snprintf(buf, sizeof(buf), "%04d-%02d-%02d", d.year, d.month, d.day);
    return buf;
}

} // namespace meterbench
