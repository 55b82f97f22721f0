#pragma once

#include <map>
#include <string>
#include <vector>

#include "meterbench/matrix.hpp"

namespace meterbench {

// Ridge least squares (tiny epsilon, a conditioning guard rather than a
// tuned regularizer); the sanity floor the tree ensembles must beat.
struct LinearModel {
    std::vector<double> beta; // per feature
    double intercept = 0.0;
    std::vector<std::string> feature_names;
};

LinearModel fit_linear_baseline(const FeatureMatrix& matrix, double ridge = 1e-6);
std::vector<double> predict_linear(const LinearModel& model, const FeatureMatrix& matrix);

void save_linear(const LinearModel& model, const std::string& path);
LinearModel load_linear(const std::string& path);

// Per-(building, meter) mean consumption by hour of week, in kWh. Falls
// back to the series mean, then the global mean, for unseen keys.
struct HourWeekModel {
    std::map<std::pair<int, int>, std::vector<double>> profiles; // 168 cells or NaN
    std::map<std::pair<int, int>, double> series_mean;
    double global_mean = 0.0;
};

HourWeekModel fit_hourweek(const std::vector<MeterReading>& readings);
// kWh predictions for (building, meter, ts) keys.
std::vector<double> predict_hourweek(const HourWeekModel& model, const std::vector<RowKey>& rows);

void save_hourweek(const HourWeekModel& model, const std::string& path);
HourWeekModel load_hourweek(const std::string& path);

} // namespace meterbench
