#include "meterbench/blend.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>

#include <json.hpp>

#include "meterbench/error.hpp"
#include "meterbench/metrics.hpp"

namespace meterbench {

using nlohmann::json;

void BlendWeights::validate(std::size_t n_members) const {
    if (weights.size() != n_members)
        throw ConfigError("blend: weight count does not match member count");
    double sum = 0.0;
    for (const double w : weights) {
        if (!(w >= 0.0)) throw ConfigError("blend: weights must be >= 0");
        sum += w;
    }
    if (!(sum > 0.0)) throw ConfigError("blend: weights must not all be zero");
    if (p < -5.0 || p > 5.0) throw ConfigError("blend: p must be in [-5, 5]");
}

namespace {

double blend_row(const std::vector<std::vector<double>>& members, std::size_t row,
                 const BlendWeights& w) {
    const double p = w.p;
    double wsum = 0.0;
    for (const double wi : w.weights) wsum += wi;
    if (p == 0.0) {
        // weighted geometric mean; any zero member sends the row to zero
        double log_acc = 0.0;
        for (std::size_t m = 0; m < members.size(); ++m) {
            if (w.weights[m] == 0.0) continue;
            const double x = members[m][row];
            if (x == 0.0) return 0.0;
            log_acc += w.weights[m] * std::log(x);
        }
        return std::exp(log_acc / wsum);
    }
    if (p < 0.0) {
        for (std::size_t m = 0; m < members.size(); ++m)
            if (w.weights[m] > 0.0 && members[m][row] == 0.0) return 0.0;
    }
    double acc = 0.0;
    for (std::size_t m = 0; m < members.size(); ++m) {
        if (w.weights[m] == 0.0) continue;
        acc += w.weights[m] * std::pow(members[m][row], p);
    }
    return std::pow(acc / wsum, 1.0 / p);
}

} // namespace

std::vector<double> blend(const std::vector<std::vector<double>>& members, const BlendSpec& spec,
                          const std::vector<int>* meters) {
    if (members.empty()) throw ConfigError("blend: no members");
    const std::size_t n = members[0].size();
    for (const auto& m : members)
        if (m.size() != n) throw ConfigError("blend: member prediction lengths differ");
    spec.overall.validate(members.size());
    for (const auto& [meter, w] : spec.per_meter) w.validate(members.size());
    if (meters && meters->size() != n)
        throw ConfigError("blend: meter routing length does not match predictions");
    for (const auto& m : members)
        for (const double v : m)
            if (!(v >= 0.0) || !std::isfinite(v))
                throw DataError("blend: member predictions must be finite and >= 0");

    std::vector<double> out(n);
    for (std::size_t i = 0; i < n; ++i) {
        const BlendWeights& w = meters ? spec.for_meter((*meters)[i]) : spec.overall;
        out[i] = blend_row(members, i, w);
    }
    return out;
}

namespace {

// All weight vectors on the simplex with the given step (compositions of
// 1/step into n parts), lexicographically ordered.
void enumerate_simplex(std::size_t n_members, int steps, std::vector<std::vector<double>>& out) {
    std::vector<int> counts(n_members, 0);
    const double step = 1.0 / static_cast<double>(steps);
    std::function<void(std::size_t, int)> rec = [&](std::size_t idx, int remaining) {
        if (idx + 1 == n_members) {
            counts[idx] = remaining;
            std::vector<double> w(n_members);
            for (std::size_t i = 0; i < n_members; ++i) w[i] = counts[i] * step;
            out.push_back(std::move(w));
            return;
        }
        for (int c = remaining; c >= 0; --c) {
            counts[idx] = c;
            rec(idx + 1, remaining - c);
        }
    };
    rec(0, steps);
}

struct Candidate {
    std::vector<double> weights;
    double p = 1.0;
    double score = std::numeric_limits<double>::infinity();
};

bool candidate_better(const Candidate& a, const Candidate& b) {
    if (a.score != b.score) return a.score < b.score;
    if (a.weights != b.weights) return a.weights < b.weights;
    return a.p < b.p;
}

class BlendScorer {
public:
    BlendScorer(const std::vector<std::vector<double>>& members,
                const std::vector<double>& actuals, const std::vector<std::size_t>& rows)
        : members_(members), rows_(rows) {
        log_actual_.reserve(rows.size());
        for (const auto r : rows) log_actual_.push_back(std::log1p(actuals[r]));
    }

    // rebuild the x^p (or ln x) cache for a new p
    void set_p(double p) {
        p_ = p;
        pow_cache_.assign(members_.size(), {});
        for (std::size_t m = 0; m < members_.size(); ++m) {
            auto& cache = pow_cache_[m];
            cache.reserve(rows_.size());
            for (const auto r : rows_) {
                const double x = members_[m][r];
                if (p_ == 0.0)
                    cache.push_back(x == 0.0 ? -std::numeric_limits<double>::infinity()
                                             : std::log(x));
                else
                    cache.push_back(std::pow(x, p_));
            }
        }
    }

    double rmsle_of(const std::vector<double>& weights) const {
        double wsum = 0.0;
        for (const double w : weights) wsum += w;
        double acc = 0.0, comp = 0.0; // Kahan
        const std::size_t n = rows_.size();
        for (std::size_t i = 0; i < n; ++i) {
            double s = 0.0;
            bool zero = false;
            for (std::size_t m = 0; m < weights.size(); ++m) {
                if (weights[m] == 0.0) continue;
                const double c = pow_cache_[m][i];
                if (p_ <= 0.0 && std::isinf(c)) {
                    zero = true;
                    break;
                }
                s += weights[m] * c;
            }
            double blended;
            if (zero)
                blended = 0.0;
            else if (p_ == 0.0)
                blended = std::exp(s / wsum);
            else
                blended = std::pow(s / wsum, 1.0 / p_);
            const double d = std::log1p(blended) - log_actual_[i];
            const double term = d * d - comp;
            const double t = acc + term;
            comp = (t - acc) - term;
            acc = t;
        }
        return std::sqrt(acc / static_cast<double>(n));
    }

private:
    const std::vector<std::vector<double>>& members_;
    std::vector<std::size_t> rows_;
    std::vector<double> log_actual_;
    double p_ = 1.0;
    std::vector<std::vector<double>> pow_cache_;
};

BlendWeights optimize_on_rows(const std::vector<std::vector<double>>& members,
                              const std::vector<double>& actuals,
                              const std::vector<std::size_t>& rows,
                              const OptimizeOptions& options) {
    const std::size_t n_members = members.size();
    const int steps = std::max(1, static_cast<int>(std::lround(1.0 / options.granularity)));
    BlendScorer scorer(members, actuals, rows);

    Candidate best;
    best.score = std::numeric_limits<double>::infinity();

    std::vector<double> p_grid = options.p_grid;
    if (p_grid.empty()) p_grid = {1.0};
    for (const double p : p_grid)
        if (p < -5.0 || p > 5.0) throw ConfigError("optimize_weights: p outside [-5, 5]");

    auto consider = [&](const std::vector<double>& w, double p, double score) {
        Candidate c{w, p, score};
        if (candidate_better(c, best)) best = std::move(c);
    };

    if (n_members <= 3) {
        std::vector<std::vector<double>> simplex;
        enumerate_simplex(n_members, steps, simplex);
        for (const double p : p_grid) {
            scorer.set_p(p);
            for (const auto& w : simplex) consider(w, p, scorer.rmsle_of(w));
        }
        return {best.weights, best.p};
    }

    // coordinate descent on the integer simplex, multiple starts
    const double step = 1.0 / static_cast<double>(steps);
    for (const double p : p_grid) {
        scorer.set_p(p);
        // every corner is scored up front so the best-single-member bound
        // holds no matter where the descent wanders
        for (std::size_t m = 0; m < n_members; ++m) {
            std::vector<double> w(n_members, 0.0);
            w[m] = 1.0;
            consider(w, p, scorer.rmsle_of(w));
        }
        std::vector<std::vector<int>> starts;
        for (std::size_t m = 0; m < n_members && static_cast<int>(m) < options.restarts; ++m) {
            std::vector<int> s(n_members, 0);
            s[m] = steps;
            starts.push_back(std::move(s));
        }
        while (static_cast<int>(starts.size()) < options.restarts) {
            // deterministic uniform-ish start
            std::vector<int> s(n_members, steps / static_cast<int>(n_members));
            int used = static_cast<int>(n_members) * (steps / static_cast<int>(n_members));
            std::size_t i = starts.size() % n_members;
            s[i] += steps - used;
            starts.push_back(std::move(s));
            if (starts.size() > 2 * n_members) break;
        }
        for (const auto& start : starts) {
            std::vector<int> cur = start;
            std::vector<double> w(n_members);
            auto to_w = [&](const std::vector<int>& c) {
                for (std::size_t m = 0; m < n_members; ++m) w[m] = c[m] * step;
                return w;
            };
            double cur_score = scorer.rmsle_of(to_w(cur));
            consider(w, p, cur_score);
            bool improved = true;
            while (improved) {
                improved = false;
                for (std::size_t from = 0; from < n_members; ++from) {
                    if (cur[from] == 0) continue;
                    for (std::size_t to = 0; to < n_members; ++to) {
                        if (to == from) continue;
                        cur[from] -= 1;
                        cur[to] += 1;
                        const double s = scorer.rmsle_of(to_w(cur));
                        if (s < cur_score) {
                            cur_score = s;
                            consider(w, p, s);
                            improved = true;
                        } else {
                            cur[from] += 1;
                            cur[to] -= 1;
                        }
                    }
                }
            }
        }
    }
    return {best.weights, best.p};
}

} // namespace

BlendSpec optimize_weights(const std::vector<std::vector<double>>& members,
                           const std::vector<double>& actuals, const OptimizeOptions& options,
                           const std::vector<int>* meters) {
    if (members.empty()) throw ConfigError("optimize_weights: no members");
    const std::size_t n = members[0].size();
    if (n == 0) throw DataError("optimize_weights: empty validation set");
    for (const auto& m : members)
        if (m.size() != n) throw ConfigError("optimize_weights: member lengths differ");
    if (actuals.size() != n) throw ConfigError("optimize_weights: actuals not aligned");
    if (!(options.granularity > 0.0) || options.granularity > 1.0)
        throw ConfigError("optimize_weights: granularity must be in (0, 1]");
    if (meters && meters->size() != n)
        throw ConfigError("optimize_weights: meter routing length mismatch");

    std::vector<std::size_t> all_rows(n);
    for (std::size_t i = 0; i < n; ++i) all_rows[i] = i;

    BlendSpec spec;
    spec.overall = optimize_on_rows(members, actuals, all_rows, options);
    if (options.per_meter && meters) {
        std::map<int, std::vector<std::size_t>> rows_by_meter;
        for (std::size_t i = 0; i < n; ++i) rows_by_meter[(*meters)[i]].push_back(i);
        for (const auto& [meter, rows] : rows_by_meter)
            spec.per_meter[meter] = optimize_on_rows(members, actuals, rows, options);
    }
    return spec;
}

void save_blend_spec(const BlendSpec& spec, const std::vector<std::string>& member_names,
                     const std::string& path) {
    json j;
    j["format"] = "meterbench-blend";
    j["schema_version"] = 1;
    j["members"] = member_names;
    j["overall"] = {{"weights", spec.overall.weights}, {"p", spec.overall.p}};
    json per_meter = json::object();
    for (const auto& [meter, w] : spec.per_meter)
        per_meter[std::to_string(meter)] = {{"weights", w.weights}, {"p", w.p}};
    j["per_meter"] = std::move(per_meter);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open for writing: " + path);
    out << j.dump(2);
    out.close();
    if (out.fail()) throw DataError("write failed: " + path);
}

BlendSpec load_blend_spec(const std::string& path, std::vector<std::string>* member_names) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("missing blend spec: " + path);
    json j;
    try {
        in >> j;
        if (j.value("format", "") != "meterbench-blend") throw DataError("not a blend spec");
        BlendSpec spec;
        if (member_names) *member_names = j["members"].get<std::vector<std::string>>();
        spec.overall.weights = j["overall"]["weights"].get<std::vector<double>>();
        spec.overall.p = j["overall"]["p"];
        for (const auto& [key, w] : j["per_meter"].items()) {
            BlendWeights bw;
            bw.weights = w["weights"].get<std::vector<double>>();
            bw.p = w["p"];
            spec.per_meter[std::stoi(key)] = std::move(bw);
        }
        return spec;
    } catch (const json::exception& e) {
        throw DataError("bad blend spec " + path + ": " + e.what());
    }
}

} // namespace meterbench
