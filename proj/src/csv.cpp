#include "meterbench/csv.hpp"

#include <charconv>

#include "meterbench/error.hpp"

namespace meterbench {

CsvReader::CsvReader(const std::string& path) : path_(path), in_(path, std::ios::binary) {
    if (!in_) throw DataError("missing file: " + path);
    std::string first;
    if (!read_record(first)) throw DataError("empty file: " + path);
    line_ = first;
    split_fields();
    header_.reserve(fields_.size());
    for (const auto f : fields_) header_.emplace_back(f);
}

std::optional<std::size_t> CsvReader::column(std::string_view name) const {
    for (std::size_t i = 0; i < header_.size(); ++i)
        if (header_[i] == name) return i;
    return std::nullopt;
}

bool CsvReader::read_record(std::string& out) {
    if (!std::getline(in_, out)) return false;
    ++line_no_;
    // A quoted field may contain embedded newlines; keep reading until the
    // quote count balances.
    auto quotes_balanced = [](const std::string& s) {
        std::size_t q = 0;
        for (const char c : s)
            if (c == '"') ++q;
        return q % 2 == 0;
    };
    while (!quotes_balanced(out)) {
        std::string more;
        if (!std::getline(in_, more)) break;
        ++line_no_;
        out += '\n';
        out += more;
    }
    if (!out.empty() && out.back() == '\r') out.pop_back();
    return true;
}

void CsvReader::split_fields() {
    fields_.clear();
    unquoted_.clear();
    unquoted_.reserve(line_.size());
    const char* p = line_.data();
    const char* end = p + line_.size();
    const char* field_start = unquoted_.data();
    std::size_t field_len = 0;
    auto push_field = [&] {
        fields_.emplace_back(field_start, field_len);
        field_start = unquoted_.data() + unquoted_.size();
        field_len = 0;
    };
    // Fields are copied into unquoted_ so views survive quote stripping.
    // unquoted_ was reserved to line size, so no reallocation happens.
    while (p <= end) {
        if (p == end) {
            push_field();
            break;
        }
        if (*p == ',') {
            push_field();
            ++p;
            if (p == end) { // trailing comma: final empty field
                push_field();
                break;
            }
            continue;
        }
        if (*p == '"' && field_len == 0) {
            ++p;
            while (p < end) {
                if (*p == '"') {
                    if (p + 1 < end && p[1] == '"') {
                        unquoted_.push_back('"');
                        ++field_len;
                        p += 2;
                    } else {
                        ++p;
                        break;
                    }
                } else {
                    unquoted_.push_back(*p);
                    ++field_len;
                    ++p;
                }
            }
            continue;
        }
        unquoted_.push_back(*p);
        ++field_len;
        ++p;
    }
}

bool CsvReader::next_row() {
    if (!read_record(line_)) return false;
    split_fields();
    return true;
}

CsvWriter::CsvWriter(const std::string& path) : path_(path), out_(path, std::ios::binary) {
    if (!out_) throw DataError("cannot open for writing: " + path);
}

void CsvWriter::write_row(const std::vector<std::string>& fields) {
    std::string row;
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) row += ',';
        const std::string& f = fields[i];
        if (f.find_first_of(",\"\n") != std::string::npos) {
            row += '"';
            for (const char c : f) {
                if (c == '"') row += '"';
                row += c;
            }
            row += '"';
        } else {
            row += f;
        }
    }
    row += '\n';
    out_.write(row.data(), static_cast<std::streamsize>(row.size()));
}

void CsvWriter::close() {
    if (out_.is_open()) {
        out_.close();
        if (out_.fail()) throw DataError("write failed: " + path_);
    }
}

CsvWriter::~CsvWriter() {
    if (out_.is_open()) out_.close();
}

std::optional<double> parse_double(std::string_view s) {
    if (s.empty()) return std::nullopt;
    double v = 0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

std::optional<std::int64_t> parse_int(std::string_view s) {
    if (s.empty()) return std::nullopt;
    std::int64_t v = 0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (r.ec != std::errc() || r.ptr != s.data() + s.size()) return std::nullopt;
    return v;
}

std::string format_double(double v) {
    char buf[40];
    const auto r = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, r.ptr);
}

std::string format_int(std::int64_t v) {
    char buf[24];
    const auto r = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, r.ptr);
}

} // namespace meterbench
