#pragma once

#include "memfit/dataset.hpp"

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace memfit {

/// Tunables for feature derivation. The defaults match the deployed
/// configuration; the schema records whatever was used at fit time.
struct FeatureOptions {
    std::string profile_delimiter = "-";
    int lag_count = 3;
    int rolling_window = 5;
    std::size_t one_hot_max_cardinality = 16; ///< larger vocabularies fall back to frequency encoding
};

/// Fixed contract of the engineered feature set: 21 base features
/// (one-hot expansion excluded from the count).
struct FeatureSchema {
    std::vector<std::string> names;
    std::map<std::string, std::string> categorical_encodings; ///< feature -> one_hot | frequency | numeric
    std::vector<std::string> group_key; ///< raw columns forming the similarity group
    std::string profile_delimiter = "-";
    int lag_count = 3;
    int rolling_window = 5;

    /// Canonical JSON rendering (sorted keys, no whitespace); basis for hash().
    std::string canonical_json() const;
    std::uint64_t hash() const;
};

FeatureSchema schema_from_json(const std::string& json_text);

/// Fitted categorical encodings and the imputation value. Fitted exclusively
/// on training rows; transform never mutates it.
struct EncoderState {
    std::map<std::string, std::map<std::string, double>> frequency_tables;
    std::map<std::string, std::vector<std::string>> one_hot_vocabularies; ///< sorted categories
    double global_target_median = 0.0; ///< MiB; lag/rolling imputation value

    std::string to_json() const;
};

EncoderState encoder_from_json(const std::string& json_text);

/// Dense feature matrix plus target vector, row order matching the source
/// dataset.
struct FeatureMatrix {
    std::size_t n_rows = 0;
    std::size_t n_cols = 0;
    std::vector<double> values; ///< row-major
    std::vector<double> target; ///< max_rss, MiB
    std::vector<std::size_t> row_ids;
    std::vector<std::string> columns; ///< expanded column names
    std::uint64_t schema_hash = 0;

    double at(std::size_t i, std::size_t j) const { return values[i * n_cols + j]; }
    std::span<const double> row(std::size_t i) const {
        return {values.data() + i * n_cols, n_cols};
    }

    /// Row range [lo, hi).
    FeatureMatrix slice(std::size_t lo, std::size_t hi) const;
    FeatureMatrix select(const std::vector<std::size_t>& rows) const;

    /// Content digest over dimensions, column names, values, and target.
    std::string digest() const;
};

struct ProfileParts {
    std::string arch;
    std::string compiler;
    std::string opt_level;
};

/// Splits a build profile on the delimiter into (arch, compiler, opt_level).
/// Missing or empty components become "unknown"; components past the third
/// are folded into opt_level. Total function.
ProfileParts parse_build_profile(const std::string& profile, const std::string& delimiter = "-");

/// Per-row strictly-causal grouped history. Lags and rolling statistics only
/// ever see rows of the same group with strictly earlier time.
struct HistoryRow {
    std::vector<double> lags;      ///< lag_1..lag_k, imputed where absent
    double rolling_mean = 0.0;
    double rolling_max = 0.0;
    double rolling_p95 = 0.0;      ///< nearest-rank
    double rolling_std = 0.0;      ///< population
    double seq_index = 0.0;        ///< count of strictly-earlier same-group rows
    double expanding_median = 0.0; ///< median of all strictly-earlier same-group targets
};

/// ds must be time-sorted. Rows with no usable history are imputed with
/// impute_value; rolling statistics use the available shorter window when at
/// least one prior row exists.
std::vector<HistoryRow> compute_grouped_history(const Dataset& ds,
                                                const std::vector<std::string>& group_key,
                                                int lag_count, int window, double impute_value);

/// Raw (pre-encoding) values of the 21 base features for a single row.
struct RawFeatures {
    double ts_hour = 0, ts_dayofweek = 0, ts_weekofyear = 0, ts_month = 0, ts_is_weekend = 0;
    std::string arch, compiler, opt_level, make_type;
    double jobs = 0;
    std::string branch_id;
    double memreq_mib = 0;
    HistoryRow history;
};

/// Throws ArgumentError on an empty training set.
EncoderState fit_encoders(const Dataset& train, const FeatureOptions& opts = {});

FeatureSchema make_schema(const EncoderState& state, const FeatureOptions& opts = {});

/// Expanded column layout: one column per numeric/frequency feature, one per
/// vocabulary entry for one-hot features ("feature=value").
std::vector<std::string> expanded_columns(const FeatureSchema& schema, const EncoderState& state);

/// Encodes one row into the expanded layout. Unseen categories get all-zero
/// one-hot indicators and frequency 0.
void encode_row(const RawFeatures& raw, const EncoderState& state, const FeatureSchema& schema,
                std::span<double> out);

/// Emits the 21 base features (expanded) for every record. Row order and
/// row_ids match the dataset. Throws ConsistencyError on schema/state
/// mismatch.
FeatureMatrix transform(const Dataset& ds, const EncoderState& state, const FeatureSchema& schema);

} // namespace memfit
