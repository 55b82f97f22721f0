#pragma once

#include <map>
#include <string>
#include <vector>

#include "meterbench/gbt.hpp"
#include "meterbench/matrix.hpp"

namespace meterbench {

enum class FoldKind { by_month, by_row_block };

struct FoldPlan {
    FoldKind kind = FoldKind::by_month;
    int k = 0;
    std::vector<int> fold_of_row; // 0..k-1, partitions the rows
};

// by_month groups the distinct calendar months of the row keys into k
// contiguous blocks (k = 12 over one year puts each month in its own
// fold); by_row_block slices the key-sorted rows into k contiguous equal
// blocks. k must be >= 2 and by_month needs at least k distinct months.
FoldPlan make_fold_plan(const FeatureMatrix& matrix, FoldKind kind, int k);

enum class SubsetKey { none, meter, site_id, primary_use, building_meter };

const char* subset_key_name(SubsetKey k);
SubsetKey subset_key_from_name(const std::string& name); // throws ConfigError

struct SubsetPlan {
    SubsetKey key = SubsetKey::none;
    // groups below this row count fall back to the global model (warning)
    std::size_t min_group_rows = 200;
    // train the global fallback even when every group is healthy, so that
    // groups unseen in training still route somewhere at prediction time
    bool ensure_global_fallback = false;
};

// Group label of a row. meter and building come from the row key;
// site_id / primary_use need the matching registry column.
std::string subset_group_of(const FeatureMatrix& matrix, std::size_t row, SubsetKey key);

constexpr const char* kGlobalGroup = "__global__";

struct CvEnsemble {
    int k = 0;
    SubsetKey subset = SubsetKey::none;
    std::vector<std::string> groups;          // sorted, may include kGlobalGroup
    std::vector<GbtModel> models;             // groups.size() * k, fold-major per group
    std::map<std::string, bool> routing;      // group -> has dedicated models
    std::vector<double> oof;                  // log1p space, one per training row
    std::vector<std::string> warnings;

    const GbtModel& model_for(const std::string& group, int fold) const;
    bool has_group(const std::string& group) const;
};

// One model per (fold, group); every training row gets an out-of-fold
// prediction from the model of its group that did not see its fold.
// Training work items run across `threads` workers with results identical
// to a serial run.
CvEnsemble fit_cv_ensemble(const FeatureMatrix& matrix, const GbtParams& params,
                           const FoldPlan& fold_plan, const SubsetPlan& subset_plan,
                           int threads = 1);

// Mean over the k fold models of each row's routed group (log1p space);
// unseen groups use the global fallback.
std::vector<double> predict_cv(const CvEnsemble& ensemble, const FeatureMatrix& matrix,
                               int threads = 1);

} // namespace meterbench
