#pragma once

#include "memfit/features.hpp"

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace memfit {

/// Hyperparameters of one quantile learner.
struct TrainConfig {
    double alpha = 0.95;
    int n_trees = 300;
    double learning_rate = 0.1;
    int max_depth = 6;
    int min_samples_leaf = 20;
    double subsample = 1.0;    ///< row fraction per boosting round, without replacement
    double colsample = 1.0;    ///< column fraction per tree
    int n_bins = 256;          ///< equal-frequency histogram bins
    std::uint64_t seed = 0;

    /// What fit() itself requires; throws ArgumentError on violation.
    void validate() const;

    /// The documented tuning ranges (alpha [0.90,0.99], n_trees [50,600],
    /// learning_rate [0.01,0.3], max_depth [3,12], min_samples_leaf [5,100],
    /// subsample/colsample [0.5,1]). Enforced at the search/CLI boundary;
    /// fit() accepts anything validate() accepts, so oracle tests can use
    /// degenerate shapes such as depth-1 stumps.
    void validate_search_band() const;
};

struct TreeNode {
    std::int32_t feature = -1; ///< -1 marks a leaf
    double threshold = 0.0;    ///< go left iff x[feature] <= threshold
    std::int32_t left = -1;
    std::int32_t right = -1;
    double value = 0.0;        ///< leaf value, residual scale (MiB)

    bool is_leaf() const { return feature < 0; }
};

struct RegressionTree {
    std::vector<TreeNode> nodes; ///< node 0 is the root

    double predict(std::span<const double> row) const;
    int depth() const;
    std::size_t leaf_count() const;
};

/// A trained forest for one alpha. Prediction is
/// base_score + learning_rate * sum of leaf values.
struct QuantileModel {
    double base_score = 0.0;
    std::vector<RegressionTree> trees;
    double learning_rate = 0.1;
    double alpha = 0.95;
    std::size_t n_features = 0;
    std::uint64_t feature_schema_hash = 0;
    std::vector<std::string> columns;     ///< expanded column names at fit time
    std::vector<double> importances;      ///< raw total split gain per column
    std::vector<double> training_loss;    ///< mean pinball loss; [0] after base_score, [t] after round t
    TrainConfig config;
};

/// alpha*(y - yhat) if y >= yhat, else (1-alpha)*(yhat - y).
double pinball_loss(double y, double yhat, double alpha);

/// Subgradient of pinball_loss in yhat: -alpha if y > yhat, (1-alpha) if
/// y < yhat, 0 at equality.
double pinball_gradient(double y, double yhat, double alpha);

/// Gradient boosting with histogram splits on the pinball pseudo-targets and
/// per-leaf refitting to the nearest-rank alpha-quantile of true residuals.
/// Throws ArgumentError when n_rows < 2*min_samples_leaf.
QuantileModel fit(const FeatureMatrix& features, const TrainConfig& config);

/// Throws ConsistencyError on a row width mismatch.
double predict(const QuantileModel& model, std::span<const double> row);

/// Element-wise equal to predict() per row; additionally checks the schema
/// hash when both sides carry one.
std::vector<double> predict_batch(const QuantileModel& model, const FeatureMatrix& features);

/// Per-column split gain normalized to sum to 1; columns with zero gain are
/// omitted, so a model that never split returns an empty map.
std::map<std::string, double> feature_importance(const QuantileModel& model);

} // namespace memfit
