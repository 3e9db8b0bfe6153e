#pragma once

#include "memfit/dataset.hpp"
#include "memfit/features.hpp"

namespace memfit {

/// Everything downstream stages need: the chronological split, training-only
/// encoder state, and feature matrices sliced from one full-dataset
/// transform (history features stay strictly causal, so slicing is safe).
struct Prepared {
    Dataset dataset;          ///< full, time-sorted
    std::size_t split_index = 0; ///< first holdout row
    EncoderState encoder;     ///< fitted on rows [0, split_index) only
    FeatureSchema schema;
    FeatureMatrix train;      ///< rows [0, split_index)
    FeatureMatrix holdout;    ///< rows [split_index, n)

    Dataset train_dataset() const;
    Dataset holdout_dataset() const;
};

Prepared prepare(Dataset ds, double holdout_fraction, const FeatureOptions& opts = {});

} // namespace memfit
