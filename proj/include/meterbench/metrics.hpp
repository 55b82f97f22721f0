#pragma once

#include <cstddef>
#include <vector>

namespace meterbench {

// Kahan-compensated accumulator so sums do not depend on chunking.
class KahanSum {
public:
    void add(double x) {
        const double y = x - comp_;
        const double t = sum_ + y;
        comp_ = (t - sum_) - y;
        sum_ = t;
    }
    double value() const { return sum_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

// Root mean squared logarithmic error with natural logs:
//   sqrt( (1/n) * sum (ln(p_i + 1) - ln(a_i + 1))^2 )
// Inputs are kWh, non-negative and finite; lengths equal and nonzero.
double rmsle(const std::vector<double>& predictions, const std::vector<double>& actuals);

// RMSE normalized by the mean actual, in percent.
double cv_rmse(const std::vector<double>& predictions, const std::vector<double>& actuals);

// Mean bias error, percent; positive when the model underpredicts:
//   100 * sum(a_i - p_i) / sum(a_i)
double mbe(const std::vector<double>& predictions, const std::vector<double>& actuals);

} // namespace meterbench
