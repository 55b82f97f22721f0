#include "meterbench/baselines.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include <Eigen/Dense>
#include <json.hpp>

#include "meterbench/error.hpp"

namespace meterbench {

using nlohmann::json;

LinearModel fit_linear_baseline(const FeatureMatrix& matrix, double ridge) {
    if (!matrix.has_target()) throw ConfigError("fit_linear_baseline: matrix has no target");
    const std::size_t n = matrix.n_rows();
    const std::size_t f = matrix.n_cols();
    if (n < f + 1) throw DataError("fit_linear_baseline: needs n_rows >= n_features + 1");

    Eigen::MatrixXd x(n, f + 1);
    Eigen::VectorXd y(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = matrix.target()[i];
        if (!std::isfinite(t)) throw DataError("fit_linear_baseline: non-finite target");
        y(static_cast<Eigen::Index>(i)) = t;
        x(static_cast<Eigen::Index>(i), 0) = 1.0;
    }
    for (std::size_t c = 0; c < f; ++c) {
        const auto& col = matrix.column(c);
        for (std::size_t i = 0; i < n; ++i) {
            if (!std::isfinite(col[i])) throw DataError("fit_linear_baseline: non-finite feature");
            x(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c + 1)) = col[i];
        }
    }
    Eigen::MatrixXd gram = x.transpose() * x;
    gram.diagonal().array() += ridge;
    const Eigen::VectorXd rhs = x.transpose() * y;
    const Eigen::VectorXd beta = gram.ldlt().solve(rhs);

    LinearModel m;
    m.intercept = beta(0);
    m.beta.resize(f);
    for (std::size_t c = 0; c < f; ++c) {
        m.beta[c] = beta(static_cast<Eigen::Index>(c + 1));
        m.feature_names.push_back(matrix.name(c));
    }
    return m;
}

std::vector<double> predict_linear(const LinearModel& model, const FeatureMatrix& matrix) {
    if (matrix.n_cols() != model.beta.size())
        throw ConfigError("predict_linear: feature count mismatch");
    std::vector<double> out(matrix.n_rows(), model.intercept);
    for (std::size_t c = 0; c < model.beta.size(); ++c) {
        const double b = model.beta[c];
        const auto& col = matrix.column(c);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += b * col[i];
    }
    return out;
}

void save_linear(const LinearModel& model, const std::string& path) {
    json j;
    j["format"] = "meterbench-linear";
    j["schema_version"] = 1;
    j["intercept"] = model.intercept;
    j["beta"] = model.beta;
    j["feature_names"] = model.feature_names;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open for writing: " + path);
    out << j.dump();
    out.close();
    if (out.fail()) throw DataError("write failed: " + path);
}

LinearModel load_linear(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("missing model file: " + path);
    json j;
    try {
        in >> j;
        if (j.value("format", "") != "meterbench-linear") throw DataError("not a linear model");
        LinearModel m;
        m.intercept = j["intercept"];
        m.beta = j["beta"].get<std::vector<double>>();
        m.feature_names = j["feature_names"].get<std::vector<std::string>>();
        return m;
    } catch (const json::exception& e) {
        throw DataError("bad model file " + path + ": " + e.what());
    }
}

HourWeekModel fit_hourweek(const std::vector<MeterReading>& readings) {
    if (readings.empty()) throw DataError("fit_hourweek: no readings");
    HourWeekModel m;
    std::map<std::pair<int, int>, std::vector<std::pair<double, std::size_t>>> sums;
    double global_sum = 0.0;
    std::map<std::pair<int, int>, std::pair<double, std::size_t>> series;
    for (const auto& r : readings) {
        const std::pair<int, int> key{r.building_id, static_cast<int>(r.meter)};
        auto& cells = sums[key];
        if (cells.empty()) cells.assign(168, {0.0, 0});
        const int how = weekday_of_hour(r.ts) * 24 + hour_of_day(r.ts);
        cells[static_cast<std::size_t>(how)].first += r.value;
        cells[static_cast<std::size_t>(how)].second += 1;
        auto& s = series[key];
        s.first += r.value;
        s.second += 1;
        global_sum += r.value;
    }
    m.global_mean = global_sum / static_cast<double>(readings.size());
    for (const auto& [key, s] : series)
        m.series_mean[key] = s.first / static_cast<double>(s.second);
    for (const auto& [key, cells] : sums) {
        std::vector<double> profile(168, std::numeric_limits<double>::quiet_NaN());
        for (std::size_t h = 0; h < 168; ++h)
            if (cells[h].second > 0)
                profile[h] = cells[h].first / static_cast<double>(cells[h].second);
        m.profiles[key] = std::move(profile);
    }
    return m;
}

std::vector<double> predict_hourweek(const HourWeekModel& model, const std::vector<RowKey>& rows) {
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto& rk : rows) {
        const std::pair<int, int> key{rk.building_id, static_cast<int>(rk.meter)};
        const auto it = model.profiles.find(key);
        double v = model.global_mean;
        if (it != model.profiles.end()) {
            const int how = weekday_of_hour(rk.ts) * 24 + hour_of_day(rk.ts);
            const double cell = it->second[static_cast<std::size_t>(how)];
            v = !std::isnan(cell) ? cell : model.series_mean.at(key);
        }
        out.push_back(v);
    }
    return out;
}

void save_hourweek(const HourWeekModel& model, const std::string& path) {
    json j;
    j["format"] = "meterbench-hourweek";
    j["schema_version"] = 1;
    j["global_mean"] = model.global_mean;
    json profiles = json::array();
    for (const auto& [key, cells] : model.profiles) {
        json p;
        p["building_id"] = key.first;
        p["meter"] = key.second;
        p["series_mean"] = model.series_mean.at(key);
        json arr = json::array();
        for (const double c : cells) arr.push_back(std::isnan(c) ? json() : json(c));
        p["cells"] = std::move(arr);
        profiles.push_back(std::move(p));
    }
    j["profiles"] = std::move(profiles);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open for writing: " + path);
    out << j.dump();
    out.close();
    if (out.fail()) throw DataError("write failed: " + path);
}

HourWeekModel load_hourweek(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("missing model file: " + path);
    json j;
    try {
        in >> j;
        if (j.value("format", "") != "meterbench-hourweek") throw DataError("not a hourweek model");
        HourWeekModel m;
        m.global_mean = j["global_mean"];
        for (const auto& p : j["profiles"]) {
            const std::pair<int, int> key{p["building_id"], p["meter"]};
            m.series_mean[key] = p["series_mean"];
            std::vector<double> cells;
            for (const auto& c : p["cells"])
                cells.push_back(c.is_null() ? std::numeric_limits<double>::quiet_NaN()
                                            : c.get<double>());
            m.profiles[key] = std::move(cells);
        }
        return m;
    } catch (const json::exception& e) {
        throw DataError("bad model file " + path + ": " + e.what());
    }
}

} // namespace meterbench
