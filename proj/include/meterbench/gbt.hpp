#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "meterbench/matrix.hpp"

namespace meterbench {

struct GbtParams {
    int n_trees = 500;
    double learning_rate = 0.1; // in (0, 1]
    int max_leaves = 31;        // >= 2
    int min_samples_leaf = 20;
    int n_bins = 255;           // 2..256
    double l2_leaf_reg = 1.0;   // lambda in the split gain / leaf value
    double feature_subsample = 1.0;
    std::uint64_t seed = 0;
    int early_stopping_rounds = 0; // 0 = off; needs a validation set

    void validate() const; // throws ConfigError
};

struct GbtNode {
    int feature = -1; // -1 = leaf
    double threshold = 0.0; // go left when x <= threshold
    double split_gain = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0; // leaf value (already shrunk by the learning rate)
};

struct GbtTree {
    std::vector<GbtNode> nodes; // nodes[0] is the root
    double predict(const FeatureMatrix& m, std::size_t row) const;
};

// Trained ensemble. Bin edges are frozen from the training data; loss
// traces are training (and validation) MSE on the log1p target after each
// iteration.
struct GbtModel {
    GbtParams params;
    std::size_t n_features = 0;
    std::vector<std::string> feature_names;
    double base_score = 0.0;
    std::vector<std::vector<double>> bin_edges; // ascending per feature
    std::vector<GbtTree> trees;
    std::vector<double> loss_trace;
    std::vector<double> valid_trace;
    int best_iteration = -1; // set when early stopping trims the ensemble
};

// Squared-error histogram learner, leaf-wise growth by best gain
//   gain = G_L^2/(H_L+l) + G_R^2/(H_R+l) - G_P^2/(H_P+l)
// with unit hessians. Deterministic for fixed params and seed.
GbtModel fit_gbt(const FeatureMatrix& train, const GbtParams& params,
                 const FeatureMatrix* valid = nullptr);

// base_score + sum of tree outputs, in log1p space.
std::vector<double> predict_gbt(const GbtModel& model, const FeatureMatrix& matrix);

void save_gbt(const GbtModel& model, const std::string& path);
GbtModel load_gbt(const std::string& path);

} // namespace meterbench
