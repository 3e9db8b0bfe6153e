#pragma once

#include "memfit/ensemble.hpp"
#include "memfit/gbdt.hpp"

#include <span>
#include <string>
#include <vector>

namespace memfit {

/// One (alpha, s) evaluation on the hold-out set.
struct OperatingPoint {
    double alpha = 0.0;
    double safety_factor = 0.0;
    double under_fraction = 0.0;
    double over_percent = 0.0;
    double cost = 0.0;
    std::size_t model_index = 0; ///< which trained member pair (one per alpha)
};

struct SweepResult {
    std::vector<OperatingPoint> points; ///< |alpha_grid| x |s_grid|, s varying fastest
    std::vector<EnsembleModel> models;  ///< one per alpha, stored with safety_factor 1.0
};

/// Trains one member pair per alpha (reusing the tuned configurations with
/// only alpha replaced) and evaluates every s by rescaling the hold-out
/// predictions. Grid values must lie within [0.90, 0.99] and [1.00, 1.15].
SweepResult sweep(const FeatureMatrix& train, const FeatureMatrix& holdout,
                  const TrainConfig& cfg_a, const TrainConfig& cfg_b,
                  std::span<const double> alpha_grid, std::span<const double> s_grid);

/// Indices of the non-dominated points (minimizing under_fraction and
/// over_percent), sorted by under_fraction ascending. Duplicates keep the
/// lowest index.
std::vector<std::size_t> non_dominated(const std::vector<OperatingPoint>& points);

struct NamedPoints {
    std::size_t balanced = 0;  ///< argmin cost over all points
    std::size_t low_waste = 0; ///< argmin over_percent among frontier points
    std::size_t low_under = 0; ///< argmin under_fraction among frontier points
};

/// Ties break by lower cost, then lower index.
NamedPoints select_named(const std::vector<OperatingPoint>& points,
                         const std::vector<std::size_t>& frontier);

/// Plot-data table: alpha, s, under_fraction, over_percent, cost,
/// is_frontier, named_role (multiple roles joined with '|').
std::string frontier_csv(const std::vector<OperatingPoint>& points,
                         const std::vector<std::size_t>& frontier, const NamedPoints& named);

/// Uniform grid lo..hi with the given step; endpoints snapped so fp drift
/// never produces an out-of-bounds value.
std::vector<double> make_grid(double lo, double hi, double step);

} // namespace memfit
