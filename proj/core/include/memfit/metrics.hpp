#pragma once

#include "memfit/dataset.hpp"

#include <span>
#include <string>
#include <vector>

namespace memfit {

struct HistogramBin {
    std::string label;
    std::size_t count = 0;
    double fraction = 0.0;
};

struct EvalReport {
    std::size_t n_jobs = 0;
    double under_fraction = 0.0;
    double over_ratio = 0.0;
    double over_percent = 0.0; ///< (over_ratio - 1) * 100
    double cost = 0.0;
    std::vector<HistogramBin> histogram;
    double mean_inference_seconds = 0.0;

    std::string to_json() const;

    /// bin_label,count,fraction table for external plotting.
    std::string histogram_csv() const;
};

/// Fraction of rows with pred < actual (strict). Throws ArgumentError on
/// length mismatch or empty input.
double underallocation_fraction(std::span<const double> preds, std::span<const double> actuals);

/// sum(preds) / sum(actuals). Throws ArgumentError on length mismatch or
/// non-positive total actual.
double overallocation_ratio(std::span<const double> preds, std::span<const double> actuals);

/// 5 * under_fraction + over_ratio; under enters as a fraction, not percent.
double cost(double under_fraction, double over_ratio);

/// Headroom h = (pred - actual) / actual partitioned into
/// under (h < 0), [0,25%), [25,50%), [50,100%), >=100%.
std::vector<HistogramBin> quality_histogram(std::span<const double> preds,
                                            std::span<const double> actuals);

/// Full report for model predictions against actual peak usage.
EvalReport evaluate(std::span<const double> preds, std::span<const double> actuals,
                    double mean_inference_seconds = 0.0);

/// The developer-request baseline: memreq acts as the prediction; a job is
/// baseline-underallocated when memory_fail_count > 0 or max_rss > memreq.
EvalReport baseline_report(const Dataset& holdout);

} // namespace memfit
