#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace meterbench {

// Streaming CSV reader: UTF-8, comma separated, first row header, optional
// RFC-4180 quoting, tolerant of CRLF and a missing final newline.
class CsvReader {
public:
    explicit CsvReader(const std::string& path); // throws DataError if missing
    const std::vector<std::string>& header() const { return header_; }
    // Column index for an exact header name, or nullopt.
    std::optional<std::size_t> column(std::string_view name) const;

    // Advances to the next data row; false at EOF. Field views stay valid
    // until the next call.
    bool next_row();
    std::size_t n_fields() const { return fields_.size(); }
    std::string_view field(std::size_t i) const { return fields_[i]; }
    std::size_t line_number() const { return line_no_; }
    const std::string& path() const { return path_; }

private:
    bool read_record(std::string& out);
    void split_fields();

    std::string path_;
    std::ifstream in_;
    std::string line_;
    std::string unquoted_;
    std::vector<std::string> header_;
    std::vector<std::string_view> fields_;
    std::size_t line_no_ = 0;
};

class CsvWriter {
public:
    explicit CsvWriter(const std::string& path); // throws DataError on failure
    void write_row(const std::vector<std::string>& fields);
    void close(); // flush + fail check; also run by the destructor
    ~CsvWriter();

private:
    std::string path_;
    std::ofstream out_;
};

// Locale-independent numeric conversions (std::charconv).
std::optional<double> parse_double(std::string_view s);
std::optional<std::int64_t> parse_int(std::string_view s);

// Shortest decimal that round-trips the exact double.
std::string format_double(double v);
std::string format_int(std::int64_t v);

} // namespace meterbench
