#pragma once

#include "memfit/features.hpp"
#include "memfit/gbdt.hpp"

#include <span>
#include <string>
#include <vector>

namespace memfit {

/// The deployable allocator: two quantile models combined per row by
/// max and scaled by the safety factor.
struct EnsembleModel {
    QuantileModel member_a;
    QuantileModel member_b;
    double alpha = 0.95;
    double safety_factor = 1.05;   ///< within [1.00, 1.15]
    double prediction_floor = 1.0; ///< MiB; allocations never go below this
    FeatureSchema feature_schema;
    EncoderState encoder;
    std::string created_at;        ///< ISO-8601, set at training time
    std::string train_data_digest;

    /// Digest of the canonical serialized payload; doubles as the file
    /// checksum.
    std::string model_id() const;
};

/// Fits both members on the same matrix. Throws ArgumentError when the
/// configs disagree on alpha or the safety factor is outside [1.00, 1.15].
EnsembleModel train_ensemble(const FeatureMatrix& train, const TrainConfig& cfg_a,
                             const TrainConfig& cfg_b, double safety_factor);

/// max(member predictions) * safety_factor, clamped below at the floor.
double predict_allocation(const EnsembleModel& model, std::span<const double> row);

std::vector<double> predict_allocation_batch(const EnsembleModel& model,
                                             const FeatureMatrix& features);

/// Versioned structured-text model file with an integrity checksum.
/// save -> load round-trips predictions bit-exactly.
void save(const EnsembleModel& model, const std::string& path);

/// Throws IoError (unreadable), CorruptionError (malformed text or checksum
/// mismatch), VersionError (unknown format_version).
EnsembleModel load(const std::string& path);

} // namespace memfit
