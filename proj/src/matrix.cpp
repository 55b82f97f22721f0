#include "meterbench/matrix.hpp"

#include <cstring>
#include <fstream>

#include "meterbench/error.hpp"

namespace meterbench {

std::size_t FeatureMatrix::add_column(std::string name, FeatureKind kind) {
    if (find(name)) throw ConfigError("duplicate feature name: " + name);
    names_.push_back(std::move(name));
    kinds_.push_back(kind);
    columns_.emplace_back(n_rows(), 0.0);
    return names_.size() - 1;
}

std::optional<std::size_t> FeatureMatrix::find(std::string_view name) const {
    for (std::size_t i = 0; i < names_.size(); ++i)
        if (names_[i] == name) return i;
    return std::nullopt;
}

std::vector<double>& FeatureMatrix::target() {
    if (!target_) throw InternalError("matrix has no target column");
    return *target_;
}

const std::vector<double>& FeatureMatrix::target() const {
    if (!target_) throw InternalError("matrix has no target column");
    return *target_;
}

void FeatureMatrix::check_consistent() const {
    for (const auto& c : columns_)
        if (c.size() != n_rows()) throw InternalError("column length != n_rows");
    if (target_ && target_->size() != n_rows()) throw InternalError("target length != n_rows");
}

namespace {

constexpr char kMagic[4] = {'M', 'B', 'F', 'M'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put(std::ofstream& out, const T& v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T take(std::ifstream& in) {
    T v{};
    in.read(reinterpret_cast<char*>(&v), sizeof(T));
    return v;
}

} // namespace

void write_fmat(const std::string& path, const FeatureMatrix& m) {
    m.check_consistent();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open for writing: " + path);
    out.write(kMagic, 4);
    put(out, kVersion);
    put(out, static_cast<std::uint64_t>(m.n_rows()));
    put(out, static_cast<std::uint32_t>(m.n_cols()));
    put(out, static_cast<std::uint8_t>(m.has_target() ? 1 : 0));
    for (std::size_t c = 0; c < m.n_cols(); ++c) {
        const std::string& name = m.name(c);
        put(out, static_cast<std::uint16_t>(name.size()));
        out.write(name.data(), static_cast<std::streamsize>(name.size()));
        put(out, static_cast<std::uint8_t>(m.kind(c) == FeatureKind::categorical ? 1 : 0));
    }
    for (const auto& k : m.keys()) {
        put(out, static_cast<std::int32_t>(k.building_id));
        put(out, static_cast<std::uint8_t>(k.meter));
        put(out, static_cast<std::int64_t>(k.ts));
    }
    if (m.has_target())
        out.write(reinterpret_cast<const char*>(m.target().data()),
                  static_cast<std::streamsize>(m.n_rows() * sizeof(double)));
    for (std::size_t c = 0; c < m.n_cols(); ++c)
        out.write(reinterpret_cast<const char*>(m.column(c).data()),
                  static_cast<std::streamsize>(m.n_rows() * sizeof(double)));
    out.close();
    if (out.fail()) throw DataError("write failed: " + path);
}

FeatureMatrix read_fmat(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("missing file: " + path);
    char magic[4];
    in.read(magic, 4);
    if (std::memcmp(magic, kMagic, 4) != 0) throw DataError("not a feature matrix file: " + path);
    if (take<std::uint32_t>(in) != kVersion) throw DataError("unsupported fmat version: " + path);
    const auto n_rows = take<std::uint64_t>(in);
    const auto n_cols = take<std::uint32_t>(in);
    const bool has_target = take<std::uint8_t>(in) != 0;
    FeatureMatrix m;
    std::vector<std::string> names(n_cols);
    std::vector<FeatureKind> kinds(n_cols);
    for (std::uint32_t c = 0; c < n_cols; ++c) {
        const auto len = take<std::uint16_t>(in);
        names[c].resize(len);
        in.read(names[c].data(), len);
        kinds[c] = take<std::uint8_t>(in) ? FeatureKind::categorical : FeatureKind::numeric;
    }
    m.keys().resize(n_rows);
    for (auto& k : m.keys()) {
        k.building_id = take<std::int32_t>(in);
        k.meter = static_cast<MeterType>(take<std::uint8_t>(in));
        k.ts = take<std::int64_t>(in);
    }
    if (has_target) {
        std::vector<double> t(n_rows);
        in.read(reinterpret_cast<char*>(t.data()),
                static_cast<std::streamsize>(n_rows * sizeof(double)));
        m.set_target(std::move(t));
    }
    for (std::uint32_t c = 0; c < n_cols; ++c) {
        const std::size_t col = m.add_column(names[c], kinds[c]);
        in.read(reinterpret_cast<char*>(m.column(col).data()),
                static_cast<std::streamsize>(n_rows * sizeof(double)));
    }
    if (!in) throw DataError("truncated feature matrix file: " + path);
    m.check_consistent();
    return m;
}

} // namespace meterbench
