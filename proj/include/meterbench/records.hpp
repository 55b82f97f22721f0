#pragma once

#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace meterbench {

// Line-delimited structured text: one record per line, a bare kind token
// followed by key=value pairs. Values containing spaces or '=' are quoted
// with '"' ('\' escapes). Used by the synth manifest, rejects reports and
// stage reports.
struct Record {
    std::string kind;
    std::vector<std::pair<std::string, std::string>> fields;

    const std::string* find(std::string_view key) const;
    // Throw DataError when the key is missing / not of the requested type.
    const std::string& get(std::string_view key) const;
    std::int64_t get_int(std::string_view key) const;
    double get_double(std::string_view key) const;

    Record& set(std::string_view key, std::string_view value);
    Record& set_int(std::string_view key, std::int64_t value);
    Record& set_double(std::string_view key, double value);
};

std::string encode_record(const Record& r);
Record decode_record(std::string_view line); // throws DataError on malformed line

void write_records(const std::string& path, const std::vector<Record>& records);
std::vector<Record> read_records(const std::string& path);

} // namespace meterbench
