#include "memfit/gbdt.hpp"

#include "memfit/errors.hpp"
#include "memfit/util.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace memfit {

namespace {

// Per-feature split candidates. Equal-frequency placement from the training
// column; thresholds sit strictly between adjacent distinct values so that
// "x <= t" routing is stable under later re-encoding.
std::vector<double> build_thresholds(std::vector<double> vals, int n_bins) {
    std::sort(vals.begin(), vals.end());
    vals.erase(std::unique(vals.begin(), vals.end()), vals.end());
    const std::size_t distinct = vals.size();
    if (distinct < 2) return {};

    auto midpoint = [](double lo, double hi) {
        double mid = lo + (hi - lo) / 2.0;
        if (!(mid > lo) || !(mid < hi)) mid = lo; // adjacent representables
        return mid;
    };

    std::vector<double> thr;
    if (distinct <= static_cast<std::size_t>(n_bins)) {
        thr.reserve(distinct - 1);
        for (std::size_t i = 1; i < distinct; ++i) thr.push_back(midpoint(vals[i - 1], vals[i]));
        return thr;
    }
    for (int b = 1; b < n_bins; ++b) {
        const std::size_t pos = static_cast<std::size_t>(
            static_cast<double>(b) * static_cast<double>(distinct) / static_cast<double>(n_bins));
        if (pos == 0 || pos >= distinct) continue;
        const double t = midpoint(vals[pos - 1], vals[pos]);
        if (thr.empty() || t > thr.back()) thr.push_back(t);
    }
    return thr;
}

struct BuildItem {
    std::vector<std::size_t> rows;
    int depth = 0;
    std::int32_t parent = -1;
    bool is_left = false;
};

// Gains below this are floating-point noise (constant pseudo-targets can
// produce tiny nonzero gains through the sum-of-squares identity).
constexpr double kMinGain = 1e-12;

} // namespace

void TrainConfig::validate() const {
    if (!(alpha > 0.0 && alpha < 1.0)) throw ArgumentError("alpha must be in (0,1)");
    if (n_trees < 0) throw ArgumentError("n_trees must be non-negative");
    if (!(learning_rate > 0.0 && learning_rate <= 1.0))
        throw ArgumentError("learning_rate must be in (0,1]");
    if (max_depth < 1) throw ArgumentError("max_depth must be >= 1");
    if (min_samples_leaf < 1) throw ArgumentError("min_samples_leaf must be >= 1");
    if (!(subsample > 0.0 && subsample <= 1.0)) throw ArgumentError("subsample must be in (0,1]");
    if (!(colsample > 0.0 && colsample <= 1.0)) throw ArgumentError("colsample must be in (0,1]");
    if (n_bins < 2 || n_bins > 65535) throw ArgumentError("n_bins must be in [2,65535]");
}

void TrainConfig::validate_search_band() const {
    validate();
    if (alpha < 0.90 || alpha > 0.99) throw ArgumentError("alpha outside [0.90,0.99]");
    if (n_trees < 50 || n_trees > 600) throw ArgumentError("n_trees outside [50,600]");
    if (learning_rate < 0.01 || learning_rate > 0.3)
        throw ArgumentError("learning_rate outside [0.01,0.3]");
    if (max_depth < 3 || max_depth > 12) throw ArgumentError("max_depth outside [3,12]");
    if (min_samples_leaf < 5 || min_samples_leaf > 100)
        throw ArgumentError("min_samples_leaf outside [5,100]");
    if (subsample < 0.5) throw ArgumentError("subsample outside [0.5,1.0]");
    if (colsample < 0.5) throw ArgumentError("colsample outside [0.5,1.0]");
}

double pinball_loss(double y, double yhat, double alpha) {
    return y >= yhat ? alpha * (y - yhat) : (1.0 - alpha) * (yhat - y);
}

double pinball_gradient(double y, double yhat, double alpha) {
    if (y > yhat) return -alpha;
    if (y < yhat) return 1.0 - alpha;
    return 0.0;
}

double RegressionTree::predict(std::span<const double> row) const {
    std::int32_t i = 0;
    while (!nodes[static_cast<std::size_t>(i)].is_leaf()) {
        const TreeNode& n = nodes[static_cast<std::size_t>(i)];
        i = row[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
    }
    return nodes[static_cast<std::size_t>(i)].value;
}

int RegressionTree::depth() const {
    if (nodes.empty()) return 0;
    int best = 0;
    std::vector<std::pair<std::int32_t, int>> stack{{0, 0}};
    while (!stack.empty()) {
        auto [i, d] = stack.back();
        stack.pop_back();
        const TreeNode& n = nodes[static_cast<std::size_t>(i)];
        if (n.is_leaf()) {
            best = std::max(best, d);
        } else {
            stack.emplace_back(n.left, d + 1);
            stack.emplace_back(n.right, d + 1);
        }
    }
    return best;
}

std::size_t RegressionTree::leaf_count() const {
    std::size_t c = 0;
    for (const auto& n : nodes) c += n.is_leaf() ? 1 : 0;
    return c;
}

QuantileModel fit(const FeatureMatrix& features, const TrainConfig& config) {
    config.validate();
    const std::size_t n = features.n_rows;
    const std::size_t d = features.n_cols;
    if (n < 2 * static_cast<std::size_t>(config.min_samples_leaf))
        throw ArgumentError("too few rows: need at least 2*min_samples_leaf");

    // Histogram layout, fixed once from the training matrix.
    std::vector<std::vector<double>> thresholds(d);
    std::size_t max_bins = 1;
    for (std::size_t j = 0; j < d; ++j) {
        std::vector<double> col(n);
        for (std::size_t i = 0; i < n; ++i) col[i] = features.at(i, j);
        thresholds[j] = build_thresholds(std::move(col), config.n_bins);
        max_bins = std::max(max_bins, thresholds[j].size() + 1);
    }
    // binned[i*d+j] = count of thresholds below x, so "x <= thr[k]" is "bin <= k".
    std::vector<std::uint16_t> binned(n * d);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) {
            const auto& t = thresholds[j];
            const double x = features.at(i, j);
            binned[i * d + j] = static_cast<std::uint16_t>(
                std::lower_bound(t.begin(), t.end(), x) - t.begin());
        }
    }

    QuantileModel model;
    model.config = config;
    model.alpha = config.alpha;
    model.learning_rate = config.learning_rate;
    model.n_features = d;
    model.feature_schema_hash = features.schema_hash;
    model.columns = features.columns;
    model.importances.assign(d, 0.0);
    model.base_score = nearest_rank_quantile(features.target, config.alpha);

    std::vector<double> preds(n, model.base_score);
    std::vector<double> row_loss(n);
    auto record_loss = [&] {
        for (std::size_t i = 0; i < n; ++i)
            row_loss[i] = pinball_loss(features.target[i], preds[i], config.alpha);
        model.training_loss.push_back(compensated_sum(row_loss) / static_cast<double>(n));
    };
    record_loss();

    Rng rng(config.seed);
    std::vector<double> z(n, 0.0); // negative subgradient pseudo-targets
    std::vector<double> hist_sum(max_bins);
    std::vector<std::size_t> hist_cnt(max_bins);

    for (int round = 0; round < config.n_trees; ++round) {
        // Sampling draws happen only when the fraction is < 1, so a full-data
        // configuration consumes no RNG state for it.
        std::vector<std::size_t> rows;
        if (config.subsample < 1.0) {
            const auto k = std::min<std::size_t>(
                n, std::max<std::size_t>(
                       1, static_cast<std::size_t>(guarded_ceil(config.subsample * static_cast<double>(n)))));
            rows = sample_without_replacement(rng, n, k);
        } else {
            rows.resize(n);
            for (std::size_t i = 0; i < n; ++i) rows[i] = i;
        }
        std::vector<std::size_t> cols;
        if (config.colsample < 1.0) {
            const auto kc = std::min<std::size_t>(
                d, std::max<std::size_t>(
                       1, static_cast<std::size_t>(guarded_ceil(config.colsample * static_cast<double>(d)))));
            cols = sample_without_replacement(rng, d, kc);
        } else {
            cols.resize(d);
            for (std::size_t j = 0; j < d; ++j) cols[j] = j;
        }

        for (const std::size_t i : rows)
            z[i] = -pinball_gradient(features.target[i], preds[i], config.alpha);

        RegressionTree tree;
        std::vector<BuildItem> stack;
        stack.push_back({std::move(rows), 0, -1, false});

        while (!stack.empty()) {
            BuildItem item = std::move(stack.back());
            stack.pop_back();
            const auto node_index = static_cast<std::int32_t>(tree.nodes.size());
            tree.nodes.emplace_back();
            if (item.parent >= 0) {
                auto& p = tree.nodes[static_cast<std::size_t>(item.parent)];
                (item.is_left ? p.left : p.right) = node_index;
            }

            const std::size_t nn = item.rows.size();
            double best_gain = kMinGain;
            std::size_t best_feature = 0, best_thr = 0;
            bool found = false;

            if (item.depth < config.max_depth &&
                nn >= 2 * static_cast<std::size_t>(config.min_samples_leaf)) {
                double total_sum = 0.0;
                for (const std::size_t r : item.rows) total_sum += z[r];
                const double total_n = static_cast<double>(nn);
                const double parent_term = total_sum * total_sum / total_n;

                for (const std::size_t j : cols) {
                    const std::size_t m = thresholds[j].size();
                    if (m == 0) continue;
                    std::fill(hist_sum.begin(), hist_sum.begin() + static_cast<std::ptrdiff_t>(m + 1), 0.0);
                    std::fill(hist_cnt.begin(), hist_cnt.begin() + static_cast<std::ptrdiff_t>(m + 1), 0);
                    for (const std::size_t r : item.rows) {
                        const std::uint16_t b = binned[r * d + j];
                        hist_sum[b] += z[r];
                        hist_cnt[b] += 1;
                    }
                    double sum_left = 0.0;
                    std::size_t n_left = 0;
                    for (std::size_t k = 0; k < m; ++k) {
                        sum_left += hist_sum[k];
                        n_left += hist_cnt[k];
                        const std::size_t n_right = nn - n_left;
                        if (n_left < static_cast<std::size_t>(config.min_samples_leaf)) continue;
                        if (n_right < static_cast<std::size_t>(config.min_samples_leaf)) break;
                        const double sum_right = total_sum - sum_left;
                        const double gain = sum_left * sum_left / static_cast<double>(n_left) +
                                            sum_right * sum_right / static_cast<double>(n_right) -
                                            parent_term;
                        // Strict > keeps the first (lowest feature, lowest
                        // threshold) maximizer, which fixes tie-breaking.
                        if (gain > best_gain) {
                            best_gain = gain;
                            best_feature = j;
                            best_thr = k;
                            found = true;
                        }
                    }
                }
            }

            if (!found) {
                std::vector<double> residuals;
                residuals.reserve(nn);
                for (const std::size_t r : item.rows)
                    residuals.push_back(features.target[r] - preds[r]);
                tree.nodes[static_cast<std::size_t>(node_index)].value =
                    nearest_rank_quantile(std::move(residuals), config.alpha);
                continue;
            }

            model.importances[best_feature] += best_gain;
            auto& node = tree.nodes[static_cast<std::size_t>(node_index)];
            node.feature = static_cast<std::int32_t>(best_feature);
            node.threshold = thresholds[best_feature][best_thr];

            std::vector<std::size_t> left_rows, right_rows;
            left_rows.reserve(nn);
            right_rows.reserve(nn);
            for (const std::size_t r : item.rows) {
                if (binned[r * d + best_feature] <= best_thr)
                    left_rows.push_back(r);
                else
                    right_rows.push_back(r);
            }
            // Right pushed first so the left child is built (and numbered)
            // first; node numbering is part of the determinism contract.
            stack.push_back({std::move(right_rows), item.depth + 1, node_index, false});
            stack.push_back({std::move(left_rows), item.depth + 1, node_index, true});
        }

        const bool noop = tree.nodes.size() == 1 && tree.nodes[0].value == 0.0;
        if (!noop) {
            for (std::size_t i = 0; i < n; ++i)
                preds[i] += config.learning_rate * tree.predict(features.row(i));
            model.trees.push_back(std::move(tree));
        }
        record_loss();
    }
    return model;
}

double predict(const QuantileModel& model, std::span<const double> row) {
    if (row.size() != model.n_features)
        throw ConsistencyError("feature vector width does not match the model");
    double acc = 0.0;
    for (const auto& tree : model.trees) acc += tree.predict(row);
    return model.base_score + model.learning_rate * acc;
}

std::vector<double> predict_batch(const QuantileModel& model, const FeatureMatrix& features) {
    if (features.n_cols != model.n_features)
        throw ConsistencyError("feature matrix width does not match the model");
    if (model.feature_schema_hash != 0 && features.schema_hash != 0 &&
        model.feature_schema_hash != features.schema_hash)
        throw ConsistencyError("feature schema hash does not match the model");
    std::vector<double> out(features.n_rows);
    for (std::size_t i = 0; i < features.n_rows; ++i) out[i] = predict(model, features.row(i));
    return out;
}

std::map<std::string, double> feature_importance(const QuantileModel& model) {
    double total = 0.0;
    for (const double g : model.importances) total += g;
    std::map<std::string, double> out;
    if (total <= 0.0) return out;
    for (std::size_t j = 0; j < model.importances.size(); ++j) {
        if (model.importances[j] <= 0.0) continue;
        const std::string name =
            j < model.columns.size() ? model.columns[j] : "f" + std::to_string(j);
        out[name] = model.importances[j] / total;
    }
    return out;
}

} // namespace memfit
