#include "meterbench/cv.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <functional>
#include <mutex>
#include <set>
#include <thread>

#include "meterbench/csv.hpp"
#include "meterbench/error.hpp"
#include "meterbench/rng.hpp"

namespace meterbench {

FoldPlan make_fold_plan(const FeatureMatrix& matrix, FoldKind kind, int k) {
    if (k < 2) throw ConfigError("fold plan: k must be >= 2");
    if (matrix.n_rows() == 0) throw DataError("fold plan: empty matrix");
    FoldPlan plan;
    plan.kind = kind;
    plan.k = k;
    plan.fold_of_row.resize(matrix.n_rows());
    if (kind == FoldKind::by_month) {
        std::set<int> month_set;
        for (const auto& key : matrix.keys()) {
            const CivilDateTime c = civil_from_hour(key.ts);
            month_set.insert(c.date.year * 12 + (c.date.month - 1));
        }
        if (static_cast<int>(month_set.size()) < k)
            throw ConfigError("fold plan: by_month with k=" + std::to_string(k) + " needs >= " +
                              std::to_string(k) + " distinct months, data has " +
                              std::to_string(month_set.size()));
        std::vector<int> months(month_set.begin(), month_set.end());
        std::map<int, int> fold_of_month;
        const std::size_t m = months.size();
        for (std::size_t i = 0; i < m; ++i)
            fold_of_month[months[i]] =
                static_cast<int>((i * static_cast<std::size_t>(k)) / m);
        for (std::size_t r = 0; r < matrix.n_rows(); ++r) {
            const CivilDateTime c = civil_from_hour(matrix.keys()[r].ts);
            plan.fold_of_row[r] = fold_of_month[c.date.year * 12 + (c.date.month - 1)];
        }
    } else {
        // contiguous equal blocks in row-key order
        std::vector<std::size_t> order(matrix.n_rows());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            const RowKey &ka = matrix.keys()[a], &kb = matrix.keys()[b];
            if (ka.building_id != kb.building_id) return ka.building_id < kb.building_id;
            if (ka.meter != kb.meter) return ka.meter < kb.meter;
            if (ka.ts != kb.ts) return ka.ts < kb.ts;
            return a < b;
        });
        const std::size_t n = order.size();
        for (std::size_t pos = 0; pos < n; ++pos)
            plan.fold_of_row[order[pos]] =
                static_cast<int>((pos * static_cast<std::size_t>(k)) / n);
    }
    return plan;
}

const char* subset_key_name(SubsetKey k) {
    switch (k) {
        case SubsetKey::none: return "none";
        case SubsetKey::meter: return "meter";
        case SubsetKey::site_id: return "site_id";
        case SubsetKey::primary_use: return "primary_use";
        case SubsetKey::building_meter: return "building_meter";
    }
    return "?";
}

SubsetKey subset_key_from_name(const std::string& name) {
    for (const SubsetKey k : {SubsetKey::none, SubsetKey::meter, SubsetKey::site_id,
                              SubsetKey::primary_use, SubsetKey::building_meter})
        if (name == subset_key_name(k)) return k;
    throw ConfigError("unknown subset key: " + name);
}

std::string subset_group_of(const FeatureMatrix& matrix, std::size_t row, SubsetKey key) {
    switch (key) {
        case SubsetKey::none:
            return kGlobalGroup;
        case SubsetKey::meter:
            return "meter=" + std::to_string(static_cast<int>(matrix.keys()[row].meter));
        case SubsetKey::building_meter:
            return "building=" + std::to_string(matrix.keys()[row].building_id) +
                   ",meter=" + std::to_string(static_cast<int>(matrix.keys()[row].meter));
        case SubsetKey::site_id:
        case SubsetKey::primary_use: {
            const char* col_name = key == SubsetKey::site_id ? "site_id" : "primary_use";
            const auto col = matrix.find(col_name);
            if (!col)
                throw ConfigError(std::string("subset key '") + col_name +
                                  "' needs that feature in the registry");
            return std::string(col_name) + "=" + format_double(matrix.column(*col)[row]);
        }
    }
    return kGlobalGroup;
}

const GbtModel& CvEnsemble::model_for(const std::string& group, int fold) const {
    const auto it = std::lower_bound(groups.begin(), groups.end(), group);
    if (it == groups.end() || *it != group)
        throw InternalError("no models for group " + group);
    const std::size_t gi = static_cast<std::size_t>(it - groups.begin());
    return models[gi * static_cast<std::size_t>(k) + static_cast<std::size_t>(fold)];
}

bool CvEnsemble::has_group(const std::string& group) const {
    return std::binary_search(groups.begin(), groups.end(), group);
}

namespace {

FeatureMatrix submatrix(const FeatureMatrix& m, const std::vector<std::size_t>& rows) {
    FeatureMatrix out;
    out.keys().reserve(rows.size());
    for (const auto r : rows) out.keys().push_back(m.keys()[r]);
    for (std::size_t c = 0; c < m.n_cols(); ++c) {
        const std::size_t col = out.add_column(m.name(c), m.kind(c));
        auto& dst = out.column(col);
        const auto& src = m.column(c);
        for (std::size_t i = 0; i < rows.size(); ++i) dst[i] = src[rows[i]];
    }
    if (m.has_target()) {
        std::vector<double> t(rows.size());
        for (std::size_t i = 0; i < rows.size(); ++i) t[i] = m.target()[rows[i]];
        out.set_target(std::move(t));
    }
    return out;
}

// run fn(0..n_tasks) across workers; any exception is rethrown
void parallel_tasks(std::size_t n_tasks, int threads, const std::function<void(std::size_t)>& fn) {
    if (threads <= 1 || n_tasks <= 1) {
        for (std::size_t i = 0; i < n_tasks; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    std::atomic<bool> failed{false};
    std::exception_ptr error;
    std::mutex error_mutex;
    auto worker = [&] {
        while (true) {
            const std::size_t i = next.fetch_add(1);
            if (i >= n_tasks || failed.load()) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
                failed.store(true);
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    const int n_workers = std::min<int>(threads, static_cast<int>(n_tasks));
    pool.reserve(static_cast<std::size_t>(n_workers));
    for (int t = 0; t < n_workers; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (error) std::rethrow_exception(error);
}

} // namespace

CvEnsemble fit_cv_ensemble(const FeatureMatrix& matrix, const GbtParams& params,
                           const FoldPlan& fold_plan, const SubsetPlan& subset_plan, int threads) {
    if (fold_plan.fold_of_row.size() != matrix.n_rows())
        throw ConfigError("fold plan does not match the matrix");
    if (!matrix.has_target()) throw ConfigError("fit_cv_ensemble: matrix has no target");

    CvEnsemble ens;
    ens.k = fold_plan.k;
    ens.subset = subset_plan.key;

    // group rows
    std::map<std::string, std::vector<std::size_t>> group_rows;
    std::vector<std::string> row_group(matrix.n_rows());
    for (std::size_t r = 0; r < matrix.n_rows(); ++r) {
        row_group[r] = subset_group_of(matrix, r, subset_plan.key);
        group_rows[row_group[r]].push_back(r);
    }

    // small groups route to the global fallback instead of a dedicated model
    bool need_global = subset_plan.key == SubsetKey::none;
    for (auto it = group_rows.begin(); it != group_rows.end();) {
        if (it->first != kGlobalGroup && it->second.size() < subset_plan.min_group_rows) {
            ens.warnings.push_back("group " + it->first + " has only " +
                                   std::to_string(it->second.size()) +
                                   " rows; routed to the global model");
            need_global = true;
            it = group_rows.erase(it);
        } else {
            ++it;
        }
    }
    // an always-on fallback for subset keys where unseen groups are likely
    if (subset_plan.ensure_global_fallback) need_global = true;
    if (need_global && !group_rows.count(kGlobalGroup)) {
        auto& all = group_rows[kGlobalGroup];
        all.resize(matrix.n_rows());
        for (std::size_t r = 0; r < matrix.n_rows(); ++r) all[r] = r;
    }

    for (const auto& [g, rows] : group_rows) ens.groups.push_back(g);
    std::sort(ens.groups.begin(), ens.groups.end());
    for (const auto& g : ens.groups) ens.routing[g] = true;

    const std::size_t n_models = ens.groups.size() * static_cast<std::size_t>(ens.k);
    ens.models.resize(n_models);

    struct Task {
        std::size_t group_index;
        int fold;
    };
    std::vector<Task> tasks;
    tasks.reserve(n_models);
    for (std::size_t gi = 0; gi < ens.groups.size(); ++gi)
        for (int f = 0; f < ens.k; ++f) tasks.push_back({gi, f});

    parallel_tasks(tasks.size(), threads, [&](std::size_t ti) {
        const Task& task = tasks[ti];
        const auto& rows = group_rows.at(ens.groups[task.group_index]);
        std::vector<std::size_t> fit_rows;
        fit_rows.reserve(rows.size());
        for (const auto r : rows)
            if (fold_plan.fold_of_row[r] != task.fold) fit_rows.push_back(r);
        if (fit_rows.empty())
            throw DataError("fold " + std::to_string(task.fold) + " leaves group " +
                            ens.groups[task.group_index] + " with no training rows");
        const FeatureMatrix sub = submatrix(matrix, fit_rows);
        GbtParams p = params;
        // decorrelate the per-model feature bags deterministically
        p.seed = mix_seed(params.seed, 0xCF01, task.group_index,
                          static_cast<std::uint64_t>(task.fold));
        ens.models[task.group_index * static_cast<std::size_t>(ens.k) +
                   static_cast<std::size_t>(task.fold)] = fit_gbt(sub, p);
    });

    // out-of-fold predictions: the model of the row's group and fold never
    // saw that row
    ens.oof.assign(matrix.n_rows(), 0.0);
    for (std::size_t r = 0; r < matrix.n_rows(); ++r) {
        const std::string& g = ens.has_group(row_group[r]) ? row_group[r] : kGlobalGroup;
        const GbtModel& m = ens.model_for(g, fold_plan.fold_of_row[r]);
        double v = m.base_score;
        for (const auto& tree : m.trees) v += tree.predict(matrix, r);
        ens.oof[r] = v;
    }
    return ens;
}

std::vector<double> predict_cv(const CvEnsemble& ens, const FeatureMatrix& matrix, int threads) {
    std::vector<double> out(matrix.n_rows(), 0.0);
    const int k = ens.k;
    // rows bucketed by group so each model streams over its rows once
    std::map<std::string, std::vector<std::size_t>> rows_by_group;
    for (std::size_t r = 0; r < matrix.n_rows(); ++r) {
        std::string g = subset_group_of(matrix, r, ens.subset);
        if (!ens.has_group(g)) g = kGlobalGroup;
        rows_by_group[g].push_back(r);
    }
    std::vector<std::pair<std::string, std::vector<std::size_t>>> buckets(rows_by_group.begin(),
                                                                          rows_by_group.end());
    parallel_tasks(buckets.size(), threads, [&](std::size_t bi) {
        const auto& [group, rows] = buckets[bi];
        if (!ens.has_group(group))
            throw DataError("no model route for group " + group + " and no global fallback");
        for (int f = 0; f < k; ++f) {
            const GbtModel& m = ens.model_for(group, f);
            for (const auto r : rows) {
                double v = m.base_score;
                for (const auto& tree : m.trees) v += tree.predict(matrix, r);
                out[r] += v;
            }
        }
        for (const auto r : rows) out[r] /= static_cast<double>(k);
    });
    return out;
}

} // namespace meterbench
