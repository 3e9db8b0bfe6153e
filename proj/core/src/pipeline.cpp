#include "memfit/pipeline.hpp"

#include "memfit/errors.hpp"

namespace memfit {

namespace {

Dataset slice_dataset(const Dataset& ds, std::size_t lo, std::size_t hi) {
    Dataset out;
    out.source_path = ds.source_path;
    out.column_mapping = ds.column_mapping;
    out.records.assign(ds.records.begin() + static_cast<std::ptrdiff_t>(lo),
                       ds.records.begin() + static_cast<std::ptrdiff_t>(hi));
    return out;
}

} // namespace

Dataset Prepared::train_dataset() const { return slice_dataset(dataset, 0, split_index); }

Dataset Prepared::holdout_dataset() const {
    return slice_dataset(dataset, split_index, dataset.size());
}

Prepared prepare(Dataset ds, double holdout_fraction, const FeatureOptions& opts) {
    auto [train_ds, holdout_ds] = temporal_split(ds, holdout_fraction);

    Prepared p;
    p.split_index = train_ds.size();
    p.dataset = std::move(ds);
    p.encoder = fit_encoders(train_ds, opts);
    p.schema = make_schema(p.encoder, opts);

    // One transform over the full ordered dataset: every row's history uses
    // only strictly-past rows, so the holdout slice needs no recomputation.
    const FeatureMatrix full = transform(p.dataset, p.encoder, p.schema);
    p.train = full.slice(0, p.split_index);
    p.holdout = full.slice(p.split_index, full.n_rows);
    return p;
}

} // namespace memfit
