#pragma once

#include "memfit/dataset.hpp"

#include <cstdint>

namespace memfit {

struct SyntheticSpec {
    std::size_t n_rows = 1000;
    std::uint64_t seed = 0;
    double noise_sigma = 0.5; ///< log-space standard deviation; 0 gives a noiseless target
};

/// Synthetic build telemetry whose target is lognormal around a deterministic
/// function of the generated features, so the true conditional alpha-quantile
/// is exp(mu(x) + z_alpha * sigma) in closed form. Used as the calibration
/// oracle for the quantile learner.
class SyntheticData {
public:
    SyntheticData(Dataset ds, double sigma) : dataset_(std::move(ds)), sigma_(sigma) {}

    const Dataset& dataset() const { return dataset_; }
    double noise_sigma() const { return sigma_; }

    /// Log-space location of the target distribution for one record,
    /// recomputed from the record's observable fields.
    double mu(const BuildRecord& rec) const;

    /// True conditional alpha-quantile of max_rss in MiB.
    double true_quantile(const BuildRecord& rec, double alpha) const;

private:
    Dataset dataset_;
    double sigma_;
};

/// Deterministic for a fixed seed. Throws ArgumentError if n_rows is 0 or
/// noise_sigma is negative.
SyntheticData generate_synthetic(const SyntheticSpec& spec);

} // namespace memfit
