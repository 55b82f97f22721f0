#include "meterbench/gbt.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <json.hpp>

#include "meterbench/error.hpp"
#include "meterbench/rng.hpp"

namespace meterbench {

using nlohmann::json;

void GbtParams::validate() const {
    if (n_trees < 0) throw ConfigError("gbt: n_trees must be >= 0");
    if (!(learning_rate > 0.0) || learning_rate > 1.0)
        throw ConfigError("gbt: learning_rate must be in (0, 1]");
    if (max_leaves < 2) throw ConfigError("gbt: max_leaves must be >= 2");
    if (min_samples_leaf < 1) throw ConfigError("gbt: min_samples_leaf must be >= 1");
    if (n_bins < 2 || n_bins > 256) throw ConfigError("gbt: n_bins must be in 2..256");
    if (!(l2_leaf_reg >= 0.0)) throw ConfigError("gbt: l2_leaf_reg must be >= 0");
    if (!(feature_subsample > 0.0) || feature_subsample > 1.0)
        throw ConfigError("gbt: feature_subsample must be in (0, 1]");
    if (early_stopping_rounds < 0) throw ConfigError("gbt: early_stopping_rounds must be >= 0");
}

double GbtTree::predict(const FeatureMatrix& m, std::size_t row) const {
    int i = 0;
    while (nodes[static_cast<std::size_t>(i)].feature >= 0) {
        const GbtNode& n = nodes[static_cast<std::size_t>(i)];
        const double x = m.column(static_cast<std::size_t>(n.feature))[row];
        i = x <= n.threshold ? n.left : n.right;
    }
    return nodes[static_cast<std::size_t>(i)].value;
}

namespace {

// Bin edges for one feature. When the distinct values fit in n_bins each
// value gets its own bin with midpoint edges, which makes the histogram
// split search identical to exact greedy search.
std::vector<double> make_bin_edges(const std::vector<double>& column, int n_bins) {
    std::vector<double> sorted = column;
    std::sort(sorted.begin(), sorted.end());
    std::vector<double> uniq;
    uniq.reserve(sorted.size());
    for (const double v : sorted)
        if (uniq.empty() || v != uniq.back()) uniq.push_back(v);
    std::vector<double> edges;
    if (uniq.size() <= static_cast<std::size_t>(n_bins)) {
        edges.reserve(uniq.size());
        for (std::size_t i = 0; i + 1 < uniq.size(); ++i)
            edges.push_back(uniq[i] + 0.5 * (uniq[i + 1] - uniq[i]));
        return edges;
    }
    // equal-frequency cuts
    const std::size_t n = sorted.size();
    edges.reserve(static_cast<std::size_t>(n_bins) - 1);
    for (int b = 1; b < n_bins; ++b) {
        const std::size_t pos = (static_cast<std::size_t>(b) * n) / static_cast<std::size_t>(n_bins);
        if (pos == 0 || pos >= n) continue;
        if (sorted[pos - 1] < sorted[pos]) {
            const double edge = sorted[pos - 1] + 0.5 * (sorted[pos] - sorted[pos - 1]);
            if (edges.empty() || edge > edges.back()) edges.push_back(edge);
        }
    }
    return edges;
}

inline std::uint8_t bin_of(const std::vector<double>& edges, double x) {
    // first edge >= x ... edges are "left boundary of going right":
    // bin b covers (edges[b-1], edges[b]]
    const auto it = std::lower_bound(edges.begin(), edges.end(), x);
    return static_cast<std::uint8_t>(it - edges.begin());
}

struct HistEntry {
    double g = 0.0;
    std::uint32_t n = 0;
};

struct SplitChoice {
    double gain = 0.0;
    int feature = -1;
    int bin = -1; // left = bins <= bin
};

// One growable leaf: a [begin, end) slice of the row order plus its
// histogram and aggregates.
struct LeafState {
    std::size_t begin = 0, end = 0;
    double sum_g = 0.0;
    std::size_t count = 0;
    std::vector<HistEntry> hist; // flat, feature offsets shared
    SplitChoice best;
    int node_id = -1;
};

} // namespace

GbtModel fit_gbt(const FeatureMatrix& train, const GbtParams& params, const FeatureMatrix* valid) {
    params.validate();
    if (!train.has_target()) throw ConfigError("fit_gbt: matrix has no target");
    const std::size_t n = train.n_rows();
    const std::size_t n_features = train.n_cols();
    if (n == 0) throw DataError("fit_gbt: empty matrix");
    if (n < static_cast<std::size_t>(params.min_samples_leaf))
        throw DataError("fit_gbt: fewer rows than min_samples_leaf");
    if (params.early_stopping_rounds > 0 && valid == nullptr)
        throw ConfigError("fit_gbt: early stopping needs a validation set");
    const auto& y = train.target();
    for (const double v : y)
        if (!std::isfinite(v)) throw DataError("fit_gbt: non-finite target");
    for (std::size_t f = 0; f < n_features; ++f)
        for (const double v : train.column(f))
            if (!std::isfinite(v)) throw DataError("fit_gbt: non-finite feature value");

    GbtModel model;
    model.params = params;
    model.n_features = n_features;
    for (std::size_t f = 0; f < n_features; ++f) model.feature_names.push_back(train.name(f));

    double mean = 0.0;
    for (const double v : y) mean += v;
    model.base_score = mean / static_cast<double>(n);

    // quantile binning on training data only; edges frozen into the model
    model.bin_edges.resize(n_features);
    std::vector<std::vector<std::uint8_t>> binned(n_features);
    std::vector<std::size_t> n_bins_of(n_features);
    std::vector<std::size_t> hist_offset(n_features);
    std::size_t hist_size = 0;
    for (std::size_t f = 0; f < n_features; ++f) {
        model.bin_edges[f] = make_bin_edges(train.column(f), params.n_bins);
        n_bins_of[f] = model.bin_edges[f].size() + 1;
        hist_offset[f] = hist_size;
        hist_size += n_bins_of[f];
        binned[f].resize(n);
        for (std::size_t i = 0; i < n; ++i) binned[f][i] = bin_of(model.bin_edges[f], train.column(f)[i]);
    }

    std::vector<double> pred(n, model.base_score);
    std::vector<double> g(n);
    std::vector<std::uint32_t> order(n);
    std::vector<std::uint32_t> scratch(n);

    std::vector<double> valid_pred;
    if (valid != nullptr) {
        if (valid->n_cols() != n_features)
            throw ConfigError("fit_gbt: validation matrix feature count mismatch");
        valid_pred.assign(valid->n_rows(), model.base_score);
    }

    Rng feature_rng(mix_seed(params.seed, 0x6B7));
    const std::size_t bag_size = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::ceil(params.feature_subsample *
                                              static_cast<double>(n_features))));

    const double lambda = params.l2_leaf_reg;
    auto leaf_score = [lambda](double sum_g, std::size_t count) {
        return sum_g * sum_g / (static_cast<double>(count) + lambda);
    };

    // split search over one leaf's histogram
    auto find_best_split = [&](const LeafState& leaf, const std::vector<std::size_t>& bag) {
        SplitChoice best;
        const double parent_score = leaf_score(leaf.sum_g, leaf.count);
        for (const std::size_t f : bag) {
            const HistEntry* h = leaf.hist.data() + hist_offset[f];
            double g_left = 0.0;
            std::size_t n_left = 0;
            const std::size_t bins = n_bins_of[f];
            for (std::size_t b = 0; b + 1 < bins; ++b) {
                g_left += h[b].g;
                n_left += h[b].n;
                if (n_left < static_cast<std::size_t>(params.min_samples_leaf)) continue;
                const std::size_t n_right = leaf.count - n_left;
                if (n_right < static_cast<std::size_t>(params.min_samples_leaf)) break;
                const double gain = leaf_score(g_left, n_left) +
                                    leaf_score(leaf.sum_g - g_left, n_right) - parent_score;
                if (gain > best.gain) {
                    best.gain = gain;
                    best.feature = static_cast<int>(f);
                    best.bin = static_cast<int>(b);
                }
            }
        }
        return best;
    };

    auto build_hist = [&](LeafState& leaf, const std::vector<std::size_t>& bag) {
        leaf.hist.assign(hist_size, HistEntry{});
        for (const std::size_t f : bag) {
            HistEntry* h = leaf.hist.data() + hist_offset[f];
            const std::uint8_t* bins = binned[f].data();
            for (std::size_t i = leaf.begin; i < leaf.end; ++i) {
                const std::uint32_t row = order[i];
                HistEntry& e = h[bins[row]];
                e.g += g[row];
                e.n += 1;
            }
        }
    };

    double best_valid = std::numeric_limits<double>::infinity();
    int best_iter = -1;

    for (int iter = 0; iter < params.n_trees; ++iter) {
        for (std::size_t i = 0; i < n; ++i) g[i] = pred[i] - y[i];

        // feature bag for this tree, sorted for deterministic scan order
        std::vector<std::size_t> bag(n_features);
        for (std::size_t f = 0; f < n_features; ++f) bag[f] = f;
        if (bag_size < n_features) {
            for (std::size_t i = 0; i < bag_size; ++i) {
                const std::size_t j =
                    i + static_cast<std::size_t>(feature_rng.uniform_int(n_features - i));
                std::swap(bag[i], bag[j]);
            }
            bag.resize(bag_size);
            std::sort(bag.begin(), bag.end());
        }

        GbtTree tree;
        for (std::size_t i = 0; i < n; ++i) order[i] = static_cast<std::uint32_t>(i);

        std::vector<LeafState> leaves;
        {
            LeafState root;
            root.begin = 0;
            root.end = n;
            root.count = n;
            for (std::size_t i = 0; i < n; ++i) root.sum_g += g[i];
            build_hist(root, bag);
            root.best = find_best_split(root, bag);
            root.node_id = 0;
            tree.nodes.emplace_back();
            leaves.push_back(std::move(root));
        }

        int n_leaves = 1;
        while (n_leaves < params.max_leaves) {
            // best open leaf; ties go to the earliest-created node
            int pick = -1;
            for (std::size_t i = 0; i < leaves.size(); ++i) {
                if (leaves[i].best.feature < 0 || leaves[i].best.gain <= 0.0) continue;
                if (pick < 0 || leaves[i].best.gain > leaves[static_cast<std::size_t>(pick)].best.gain)
                    pick = static_cast<int>(i);
            }
            if (pick < 0) break;

            LeafState leaf = std::move(leaves[static_cast<std::size_t>(pick)]);
            leaves.erase(leaves.begin() + pick);
            const std::size_t f = static_cast<std::size_t>(leaf.best.feature);
            const std::uint8_t split_bin = static_cast<std::uint8_t>(leaf.best.bin);

            // stable partition of the row slice: left rows keep their order
            std::size_t n_left = 0;
            {
                std::size_t l = leaf.begin, r = 0;
                for (std::size_t i = leaf.begin; i < leaf.end; ++i) {
                    const std::uint32_t row = order[i];
                    if (binned[f][row] <= split_bin)
                        order[l++] = row;
                    else
                        scratch[r++] = row;
                }
                n_left = l - leaf.begin;
                std::copy(scratch.begin(), scratch.begin() + static_cast<std::ptrdiff_t>(r),
                          order.begin() + static_cast<std::ptrdiff_t>(l));
            }

            LeafState left, right;
            left.begin = leaf.begin;
            left.end = leaf.begin + n_left;
            right.begin = left.end;
            right.end = leaf.end;

            // build the smaller child's histogram, derive the sibling by
            // subtraction from the parent
            const bool left_small = n_left * 2 <= leaf.count;
            LeafState& small = left_small ? left : right;
            LeafState& big = left_small ? right : left;
            for (std::size_t i = small.begin; i < small.end; ++i) small.sum_g += g[order[i]];
            small.count = small.end - small.begin;
            big.sum_g = leaf.sum_g - small.sum_g;
            big.count = leaf.count - small.count;
            build_hist(small, bag);
            big.hist = std::move(leaf.hist);
            for (const std::size_t bf : bag) {
                HistEntry* hb = big.hist.data() + hist_offset[bf];
                const HistEntry* hs = small.hist.data() + hist_offset[bf];
                for (std::size_t b = 0; b < n_bins_of[bf]; ++b) {
                    hb[b].g -= hs[b].g;
                    hb[b].n -= hs[b].n;
                }
            }
            left.best = find_best_split(left, bag);
            right.best = find_best_split(right, bag);

            GbtNode& parent = tree.nodes[static_cast<std::size_t>(leaf.node_id)];
            parent.feature = static_cast<int>(f);
            parent.threshold = model.bin_edges[f][static_cast<std::size_t>(split_bin)];
            parent.split_gain = leaf.best.gain;
            parent.left = static_cast<int>(tree.nodes.size());
            parent.right = static_cast<int>(tree.nodes.size() + 1);
            left.node_id = parent.left;
            right.node_id = parent.right;
            tree.nodes.emplace_back();
            tree.nodes.emplace_back();
            leaves.push_back(std::move(left));
            leaves.push_back(std::move(right));
            ++n_leaves;
        }

        for (const LeafState& leaf : leaves) {
            const double value = -params.learning_rate * leaf.sum_g /
                                 (static_cast<double>(leaf.count) + lambda);
            tree.nodes[static_cast<std::size_t>(leaf.node_id)].value = value;
            for (std::size_t i = leaf.begin; i < leaf.end; ++i) pred[order[i]] += value;
        }

        double mse = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double d = pred[i] - y[i];
            mse += d * d;
        }
        model.loss_trace.push_back(mse / static_cast<double>(n));
        model.trees.push_back(std::move(tree));

        if (valid != nullptr) {
            const GbtTree& t = model.trees.back();
            double vmse = 0.0;
            for (std::size_t i = 0; i < valid->n_rows(); ++i) {
                valid_pred[i] += t.predict(*valid, i);
                const double d = valid_pred[i] - valid->target()[i];
                vmse += d * d;
            }
            vmse /= static_cast<double>(valid->n_rows());
            model.valid_trace.push_back(vmse);
            if (params.early_stopping_rounds > 0) {
                if (vmse < best_valid) {
                    best_valid = vmse;
                    best_iter = iter;
                } else if (iter - best_iter >= params.early_stopping_rounds) {
                    break;
                }
            }
        }
    }

    if (params.early_stopping_rounds > 0 && best_iter >= 0 &&
        static_cast<std::size_t>(best_iter + 1) < model.trees.size()) {
        model.trees.resize(static_cast<std::size_t>(best_iter + 1));
        model.best_iteration = best_iter;
    }
    return model;
}

std::vector<double> predict_gbt(const GbtModel& model, const FeatureMatrix& matrix) {
    if (matrix.n_cols() != model.n_features)
        throw ConfigError("predict_gbt: matrix has " + std::to_string(matrix.n_cols()) +
                          " features, model expects " + std::to_string(model.n_features));
    std::vector<double> out(matrix.n_rows(), model.base_score);
    for (const auto& tree : model.trees)
        for (std::size_t i = 0; i < matrix.n_rows(); ++i) out[i] += tree.predict(matrix, i);
    return out;
}

void save_gbt(const GbtModel& model, const std::string& path) {
    json j;
    j["format"] = "meterbench-gbt";
    j["schema_version"] = 1;
    j["params"] = {{"n_trees", model.params.n_trees},
                   {"learning_rate", model.params.learning_rate},
                   {"max_leaves", model.params.max_leaves},
                   {"min_samples_leaf", model.params.min_samples_leaf},
                   {"n_bins", model.params.n_bins},
                   {"l2_leaf_reg", model.params.l2_leaf_reg},
                   {"feature_subsample", model.params.feature_subsample},
                   {"seed", model.params.seed},
                   {"early_stopping_rounds", model.params.early_stopping_rounds}};
    j["n_features"] = model.n_features;
    j["feature_names"] = model.feature_names;
    j["base_score"] = model.base_score;
    j["bin_edges"] = model.bin_edges;
    j["loss_trace"] = model.loss_trace;
    j["valid_trace"] = model.valid_trace;
    j["best_iteration"] = model.best_iteration;
    json trees = json::array();
    for (const auto& t : model.trees) {
        json nodes = json::array();
        for (const auto& nd : t.nodes)
            nodes.push_back({nd.feature, nd.threshold, nd.split_gain, nd.left, nd.right, nd.value});
        trees.push_back(std::move(nodes));
    }
    j["trees"] = std::move(trees);
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open for writing: " + path);
    out << j.dump();
    out.close();
    if (out.fail()) throw DataError("write failed: " + path);
}

GbtModel load_gbt(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("missing model file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw DataError("bad model JSON in " + path + ": " + e.what());
    }
    try {
        if (j.value("format", "") != "meterbench-gbt" || j.value("schema_version", 0) != 1)
            throw DataError("not a meterbench gbt model (or wrong version): " + path);
        GbtModel m;
        const auto& p = j["params"];
        m.params.n_trees = p["n_trees"];
        m.params.learning_rate = p["learning_rate"];
        m.params.max_leaves = p["max_leaves"];
        m.params.min_samples_leaf = p["min_samples_leaf"];
        m.params.n_bins = p["n_bins"];
        m.params.l2_leaf_reg = p["l2_leaf_reg"];
        m.params.feature_subsample = p["feature_subsample"];
        m.params.seed = p["seed"];
        m.params.early_stopping_rounds = p["early_stopping_rounds"];
        m.n_features = j["n_features"];
        m.feature_names = j["feature_names"].get<std::vector<std::string>>();
        m.base_score = j["base_score"];
        m.bin_edges = j["bin_edges"].get<std::vector<std::vector<double>>>();
        m.loss_trace = j["loss_trace"].get<std::vector<double>>();
        m.valid_trace = j["valid_trace"].get<std::vector<double>>();
        m.best_iteration = j["best_iteration"];
        for (const auto& jt : j["trees"]) {
            GbtTree t;
            for (const auto& jn : jt) {
                GbtNode nd;
                nd.feature = jn[0];
                nd.threshold = jn[1];
                nd.split_gain = jn[2];
                nd.left = jn[3];
                nd.right = jn[4];
                nd.value = jn[5];
                if (nd.feature >= static_cast<int>(m.n_features))
                    throw DataError(path + ": node feature index out of range");
                if (nd.feature < 0 && !std::isfinite(nd.value))
                    throw DataError(path + ": non-finite leaf value");
                t.nodes.push_back(nd);
            }
            m.trees.push_back(std::move(t));
        }
        return m;
    } catch (const json::exception& e) {
        throw DataError("bad model file " + path + ": " + e.what());
    }
}

} // namespace meterbench
