// Microbenchmarks for the latency-sensitive paths: single-row and batch
// inference, feature transformation, request handling, and a small training
// run for regression tracking.

#include <memfit/ensemble.hpp>
#include <memfit/features.hpp>
#include <memfit/gbdt.hpp>
#include <memfit/pipeline.hpp>
#include <memfit/service.hpp>
#include <memfit/synthetic.hpp>

#include <benchmark/benchmark.h>

#include <nlohmann/json.hpp>

#include <string>

namespace {

using namespace memfit;

struct Fixture {
    Prepared prepared;
    EnsembleModel model;
    std::string request_body;
};

const Fixture& fixture() {
    static const Fixture fx = [] {
        const auto synth = generate_synthetic({.n_rows = 4000, .seed = 20240101});
        Fixture f;
        f.prepared = prepare(synth.dataset(), 0.2);

        TrainConfig cfg;
        cfg.n_trees = 200;
        cfg.learning_rate = 0.05;
        cfg.max_depth = 4;
        cfg.min_samples_leaf = 20;
        TrainConfig cfg_b = cfg;
        cfg_b.seed = 99;
        cfg_b.max_depth = 6;
        f.model = train_ensemble(f.prepared.train, cfg, cfg_b, 1.05);
        f.model.feature_schema = f.prepared.schema;
        f.model.encoder = f.prepared.encoder;

        const auto columns = expanded_columns(f.prepared.schema, f.prepared.encoder);
        nlohmann::json feats = nlohmann::json::object();
        for (std::size_t i = 0; i < columns.size(); ++i)
            feats[columns[i]] = f.prepared.holdout.values[i];
        f.request_body = nlohmann::json{{"features", feats}}.dump();
        return f;
    }();
    return fx;
}

void BM_PredictRow(benchmark::State& state) {
    const Fixture& fx = fixture();
    std::size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(
            predict_allocation(fx.model, fx.prepared.holdout.row(i % fx.prepared.holdout.n_rows)));
        ++i;
    }
}
BENCHMARK(BM_PredictRow);

void BM_PredictBatch(benchmark::State& state) {
    const Fixture& fx = fixture();
    for (auto _ : state)
        benchmark::DoNotOptimize(predict_allocation_batch(fx.model, fx.prepared.holdout));
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                            static_cast<std::int64_t>(fx.prepared.holdout.n_rows));
}
BENCHMARK(BM_PredictBatch);

void BM_Transform(benchmark::State& state) {
    const Fixture& fx = fixture();
    for (auto _ : state)
        benchmark::DoNotOptimize(
            transform(fx.prepared.dataset, fx.prepared.encoder, fx.prepared.schema));
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) *
                            static_cast<std::int64_t>(fx.prepared.dataset.size()));
}
BENCHMARK(BM_Transform);

void BM_HandlePredict(benchmark::State& state) {
    const Fixture& fx = fixture();
    PredictionService service(fx.model);
    for (auto _ : state) benchmark::DoNotOptimize(service.handle_predict(fx.request_body));
}
BENCHMARK(BM_HandlePredict);

void BM_FitSmall(benchmark::State& state) {
    const Fixture& fx = fixture();
    const FeatureMatrix small = fx.prepared.train.slice(0, 1000);
    TrainConfig cfg;
    cfg.n_trees = 50;
    cfg.max_depth = 4;
    cfg.min_samples_leaf = 20;
    for (auto _ : state) benchmark::DoNotOptimize(fit(small, cfg));
}
BENCHMARK(BM_FitSmall);

} // namespace

BENCHMARK_MAIN();
