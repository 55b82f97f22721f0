#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace meterbench {

// Weighted generalized mean parameters: p = 1 arithmetic, p -> 0 geometric
// (the p = 0 encoding), p = -1 harmonic.
struct BlendWeights {
    std::vector<double> weights; // >= 0, not all zero
    double p = 1.0;              // in [-5, 5]

    void validate(std::size_t n_members) const; // throws ConfigError
};

struct BlendSpec {
    BlendWeights overall;
    std::map<int, BlendWeights> per_meter; // meter code -> weights, optional

    const BlendWeights& for_meter(int meter) const {
        const auto it = per_meter.find(meter);
        return it == per_meter.end() ? overall : it->second;
    }
};

// Combines aligned member predictions (kWh space, >= 0). `meters` routes
// each row to its meter's weight table when given (must match row count).
// A zero member with p <= 0 makes the blended row 0 (limit convention).
std::vector<double> blend(const std::vector<std::vector<double>>& members, const BlendSpec& spec,
                          const std::vector<int>* meters = nullptr);

struct OptimizeOptions {
    std::vector<double> p_grid = {0.0, 0.5, 1.0, 1.5, 2.0};
    double granularity = 0.05; // simplex step
    bool per_meter = false;
    int restarts = 10; // coordinate descent restarts for > 3 members
};

// Minimizes validation RMSLE over the weight simplex crossed with p_grid.
// Exhaustive for <= 3 members, coordinate descent above. Every single-
// member corner is evaluated, so the result is never worse than the best
// member. Ties prefer the lexicographically smallest weight vector, then
// the smallest p.
BlendSpec optimize_weights(const std::vector<std::vector<double>>& members,
                           const std::vector<double>& actuals, const OptimizeOptions& options,
                           const std::vector<int>* meters = nullptr);

void save_blend_spec(const BlendSpec& spec, const std::vector<std::string>& member_names,
                     const std::string& path);
BlendSpec load_blend_spec(const std::string& path, std::vector<std::string>* member_names = nullptr);

} // namespace meterbench
