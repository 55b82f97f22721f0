#pragma once

#include <optional>
#include <string>
#include <vector>

#include "meterbench/dataset.hpp"

namespace meterbench {

enum class FeatureKind { numeric, categorical };

struct RowKey {
    int building_id;
    MeterType meter;
    HourStamp ts;
};

// Row-aligned design matrix, column-major. Registry names are unique;
// every column has exactly n_rows values. The optional target column is
// ln(1 + kWh).
class FeatureMatrix {
public:
    std::size_t n_rows() const { return keys_.size(); }
    std::size_t n_cols() const { return names_.size(); }

    std::size_t add_column(std::string name, FeatureKind kind); // throws ConfigError on dup
    const std::string& name(std::size_t col) const { return names_[col]; }
    FeatureKind kind(std::size_t col) const { return kinds_[col]; }
    std::optional<std::size_t> find(std::string_view name) const;

    std::vector<double>& column(std::size_t col) { return columns_[col]; }
    const std::vector<double>& column(std::size_t col) const { return columns_[col]; }

    std::vector<RowKey>& keys() { return keys_; }
    const std::vector<RowKey>& keys() const { return keys_; }

    bool has_target() const { return target_.has_value(); }
    std::vector<double>& target();
    const std::vector<double>& target() const;
    void set_target(std::vector<double> t) { target_ = std::move(t); }

    // n_rows-consistency and registry uniqueness; throws InternalError.
    void check_consistent() const;

private:
    std::vector<std::string> names_;
    std::vector<FeatureKind> kinds_;
    std::vector<std::vector<double>> columns_;
    std::vector<RowKey> keys_;
    std::optional<std::vector<double>> target_;
};

// Compact binary serialization for stage hand-off (little-endian).
void write_fmat(const std::string& path, const FeatureMatrix& m);
FeatureMatrix read_fmat(const std::string& path);

} // namespace meterbench
