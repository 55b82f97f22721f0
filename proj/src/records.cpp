#include "meterbench/records.hpp"

#include <fstream>

#include "meterbench/csv.hpp"
#include "meterbench/error.hpp"

namespace meterbench {

const std::string* Record::find(std::string_view key) const {
    for (const auto& [k, v] : fields)
        if (k == key) return &v;
    return nullptr;
}

const std::string& Record::get(std::string_view key) const {
    const std::string* v = find(key);
    if (!v) throw DataError("record '" + kind + "' missing field '" + std::string(key) + "'");
    return *v;
}

std::int64_t Record::get_int(std::string_view key) const {
    const auto v = parse_int(get(key));
    if (!v) throw DataError("record '" + kind + "' field '" + std::string(key) + "' is not an integer");
    return *v;
}

double Record::get_double(std::string_view key) const {
    const auto v = parse_double(get(key));
    if (!v) throw DataError("record '" + kind + "' field '" + std::string(key) + "' is not a number");
    return *v;
}

Record& Record::set(std::string_view key, std::string_view value) {
    fields.emplace_back(std::string(key), std::string(value));
    return *this;
}

Record& Record::set_int(std::string_view key, std::int64_t value) {
    return set(key, format_int(value));
}

Record& Record::set_double(std::string_view key, double value) {
    return set(key, format_double(value));
}

namespace {

bool needs_quoting(std::string_view v) {
    if (v.empty()) return true;
    for (const char c : v)
        if (c == ' ' || c == '=' || c == '"' || c == '\\' || c == '\n') return true;
    return false;
}

void append_value(std::string& out, std::string_view v) {
    if (!needs_quoting(v)) {
        out += v;
        return;
    }
    out += '"';
    for (const char c : v) {
        if (c == '"' || c == '\\') out += '\\';
        if (c == '\n') {
            out += "\\n";
            continue;
        }
        out += c;
    }
    out += '"';
}

} // namespace

std::string encode_record(const Record& r) {
    std::string out = r.kind;
    for (const auto& [k, v] : r.fields) {
        out += ' ';
        out += k;
        out += '=';
        append_value(out, v);
    }
    return out;
}

Record decode_record(std::string_view line) {
    Record r;
    std::size_t i = 0;
    const std::size_t n = line.size();
    auto skip_ws = [&] {
        while (i < n && line[i] == ' ') ++i;
    };
    skip_ws();
    const std::size_t kind_start = i;
    while (i < n && line[i] != ' ') ++i;
    r.kind = std::string(line.substr(kind_start, i - kind_start));
    if (r.kind.empty()) throw DataError("empty record line");
    while (true) {
        skip_ws();
        if (i >= n) break;
        const std::size_t key_start = i;
        while (i < n && line[i] != '=' && line[i] != ' ') ++i;
        if (i >= n || line[i] != '=')
            throw DataError("malformed record field in: " + std::string(line));
        std::string key(line.substr(key_start, i - key_start));
        ++i;
        std::string value;
        if (i < n && line[i] == '"') {
            ++i;
            bool closed = false;
            while (i < n) {
                const char c = line[i++];
                if (c == '\\' && i < n) {
                    const char e = line[i++];
                    value += (e == 'n') ? '\n' : e;
                } else if (c == '"') {
                    closed = true;
                    break;
                } else {
                    value += c;
                }
            }
            if (!closed) throw DataError("unterminated quoted value in: " + std::string(line));
        } else {
            const std::size_t vstart = i;
            while (i < n && line[i] != ' ') ++i;
            value = std::string(line.substr(vstart, i - vstart));
        }
        r.fields.emplace_back(std::move(key), std::move(value));
    }
    return r;
}

void write_records(const std::string& path, const std::vector<Record>& records) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open for writing: " + path);
    for (const auto& r : records) {
        const std::string line = encode_record(r) + "\n";
        out.write(line.data(), static_cast<std::streamsize>(line.size()));
    }
    out.close();
    if (out.fail()) throw DataError("write failed: " + path);
}

std::vector<Record> read_records(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("missing file: " + path);
    std::vector<Record> out;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        out.push_back(decode_record(line));
    }
    return out;
}

} // namespace meterbench
