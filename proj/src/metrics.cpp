#include "meterbench/metrics.hpp"

#include <cmath>

#include "meterbench/error.hpp"

namespace meterbench {

namespace {

void check_pair(const std::vector<double>& p, const std::vector<double>& a, bool nonneg) {
    if (p.size() != a.size()) throw DataError("metric: length mismatch");
    if (p.empty()) throw DataError("metric: empty input");
    for (const double v : p)
        if (!std::isfinite(v) || (nonneg && v < 0.0))
            throw DataError("metric: predictions must be finite" +
                            std::string(nonneg ? " and non-negative" : ""));
    for (const double v : a)
        if (!std::isfinite(v) || (nonneg && v < 0.0))
            throw DataError("metric: actuals must be finite" +
                            std::string(nonneg ? " and non-negative" : ""));
}

} // namespace

double rmsle(const std::vector<double>& predictions, const std::vector<double>& actuals) {
    check_pair(predictions, actuals, /*nonneg=*/true);
    KahanSum sum;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const double d = std::log1p(predictions[i]) - std::log1p(actuals[i]);
        sum.add(d * d);
    }
    return std::sqrt(sum.value() / static_cast<double>(predictions.size()));
}

double cv_rmse(const std::vector<double>& predictions, const std::vector<double>& actuals) {
    check_pair(predictions, actuals, /*nonneg=*/false);
    KahanSum sq, mean;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const double d = predictions[i] - actuals[i];
        sq.add(d * d);
        mean.add(actuals[i]);
    }
    const double n = static_cast<double>(predictions.size());
    const double mean_actual = mean.value() / n;
    if (mean_actual == 0.0) throw DataError("cv_rmse: mean of actuals is zero");
    return 100.0 * std::sqrt(sq.value() / n) / mean_actual;
}

double mbe(const std::vector<double>& predictions, const std::vector<double>& actuals) {
    check_pair(predictions, actuals, /*nonneg=*/false);
    KahanSum diff, total;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        diff.add(actuals[i] - predictions[i]);
        total.add(actuals[i]);
    }
    if (total.value() == 0.0) throw DataError("mbe: sum of actuals is zero");
    return 100.0 * diff.value() / total.value();
}

} // namespace meterbench
