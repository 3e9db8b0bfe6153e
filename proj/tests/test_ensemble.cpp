#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <memfit/ensemble.hpp>
#include <memfit/errors.hpp>
#include <memfit/pipeline.hpp>
#include <memfit/synthetic.hpp>
#include <memfit/util.hpp>

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>
#include <vector>

using namespace memfit;
using nlohmann::json;

namespace {

QuantileModel constant_member(double value, double alpha = 0.95) {
    QuantileModel m;
    m.base_score = value;
    m.alpha = alpha;
    m.n_features = 1;
    m.columns = {"x0"};
    m.importances = {0.0};
    m.training_loss = {0.0};
    m.config.alpha = alpha;
    return m;
}

EnsembleModel constant_ensemble(double a, double b, double s) {
    EnsembleModel e;
    e.member_a = constant_member(a);
    e.member_b = constant_member(b);
    e.alpha = 0.95;
    e.safety_factor = s;
    return e;
}

struct TempFile {
    std::filesystem::path path;
    explicit TempFile(const std::string& name) {
        path = std::filesystem::temp_directory_path() / name;
    }
    ~TempFile() { std::filesystem::remove(path); }
};

EnsembleModel trained_fixture() {
    auto synth = generate_synthetic({.n_rows = 400, .seed = 10, .noise_sigma = 0.4});
    Prepared p = prepare(synth.dataset(), 0.2);
    TrainConfig cfg;
    cfg.n_trees = 25;
    cfg.max_depth = 3;
    cfg.min_samples_leaf = 10;
    TrainConfig cfg_b = cfg;
    cfg_b.seed = 99;
    cfg_b.learning_rate = 0.2;
    EnsembleModel model = train_ensemble(p.train, cfg, cfg_b, 1.05);
    model.feature_schema = p.schema;
    model.encoder = p.encoder;
    return model;
}

} // namespace

TEST_CASE("allocation is exactly max of members times safety factor") {
    Rng rng(2024);
    std::vector<double> row{0.0};
    for (int i = 0; i < 1000; ++i) {
        double a = rng.uniform(1.0, 20000.0);
        double b = rng.uniform(1.0, 20000.0);
        double s = rng.uniform(1.0, 1.15);
        EnsembleModel e = constant_ensemble(a, b, s);
        double expected = std::max(a, b) * s;
        CHECK(predict_allocation(e, row) == expected);
        // Member symmetry.
        EnsembleModel swapped = constant_ensemble(b, a, s);
        CHECK(predict_allocation(swapped, row) == expected);
    }
}

TEST_CASE("allocations never fall below the floor") {
    EnsembleModel e = constant_ensemble(0.1, 0.2, 1.0);
    std::vector<double> row{0.0};
    CHECK(predict_allocation(e, row) == e.prediction_floor);
    CHECK(e.prediction_floor == 1.0);
}

TEST_CASE("raising s never increases underallocations and strictly raises the total") {
    Rng rng(5);
    const int n = 200;
    std::vector<EnsembleModel> cases;
    std::vector<double> actuals;
    for (int i = 0; i < n; ++i) {
        cases.push_back(constant_ensemble(rng.uniform(100, 2000), rng.uniform(100, 2000), 1.0));
        actuals.push_back(rng.uniform(100, 2300));
    }
    std::vector<double> row{0.0};
    std::size_t prev_under = n + 1;
    double prev_total = 0.0;
    bool first = true;
    for (double s = 1.0; s <= 1.1501; s += 0.005) {
        std::size_t under = 0;
        double total = 0.0;
        for (int i = 0; i < n; ++i) {
            cases[static_cast<std::size_t>(i)].safety_factor = s;
            double alloc = predict_allocation(cases[static_cast<std::size_t>(i)], row);
            if (alloc < actuals[static_cast<std::size_t>(i)]) ++under;
            total += alloc;
        }
        if (!first) {
            CHECK(under <= prev_under);
            CHECK(total > prev_total);
        }
        prev_under = under;
        prev_total = total;
        first = false;
    }
}

TEST_CASE("trained ensemble: batch equals per-row max formula") {
    EnsembleModel model = trained_fixture();
    auto synth = generate_synthetic({.n_rows = 400, .seed = 10, .noise_sigma = 0.4});
    Prepared p = prepare(synth.dataset(), 0.2);

    auto batch = predict_allocation_batch(model, p.holdout);
    auto pa = predict_batch(model.member_a, p.holdout);
    auto pb = predict_batch(model.member_b, p.holdout);
    REQUIRE(batch.size() == p.holdout.n_rows);
    for (std::size_t i = 0; i < batch.size(); ++i) {
        double expected = std::max(pa[i], pb[i]) * model.safety_factor;
        if (expected < model.prediction_floor) expected = model.prediction_floor;
        CHECK(batch[i] == expected);
        CHECK(batch[i] == predict_allocation(model, p.holdout.row(i)));
    }
}

TEST_CASE("train_ensemble validates alpha agreement and the safety band") {
    auto synth = generate_synthetic({.n_rows = 200, .seed = 3, .noise_sigma = 0.3});
    Prepared p = prepare(synth.dataset(), 0.2);
    TrainConfig a, b;
    a.n_trees = b.n_trees = 5;
    b.alpha = 0.97;
    CHECK_THROWS_AS(train_ensemble(p.train, a, b, 1.05), ArgumentError);
    b.alpha = a.alpha;
    CHECK_THROWS_AS(train_ensemble(p.train, a, b, 0.99), ArgumentError);
    CHECK_THROWS_AS(train_ensemble(p.train, a, b, 1.16), ArgumentError);
    CHECK_NOTHROW(train_ensemble(p.train, a, b, 1.0));
    CHECK_NOTHROW(train_ensemble(p.train, a, b, 1.15));
}

TEST_CASE("save/load round-trips predictions bit-exactly") {
    EnsembleModel model = trained_fixture();
    TempFile file("memfit_ensemble_roundtrip.json");
    save(model, file.path.string());
    EnsembleModel back = load(file.path.string());

    CHECK(back.model_id() == model.model_id());
    CHECK(back.alpha == model.alpha);
    CHECK(back.safety_factor == model.safety_factor);
    CHECK(back.created_at == model.created_at);
    CHECK(back.train_data_digest == model.train_data_digest);
    CHECK(back.feature_schema.hash() == model.feature_schema.hash());
    CHECK(back.encoder.to_json() == model.encoder.to_json());

    auto synth = generate_synthetic({.n_rows = 400, .seed = 10, .noise_sigma = 0.4});
    Prepared p = prepare(synth.dataset(), 0.2);
    auto before = predict_allocation_batch(model, p.holdout);
    auto after = predict_allocation_batch(back, p.holdout);
    REQUIRE(before.size() == after.size());
    for (std::size_t i = 0; i < before.size(); ++i) CHECK(before[i] == after[i]);
}

TEST_CASE("the file checksum matches model_id and guards the payload") {
    EnsembleModel model = trained_fixture();
    TempFile file("memfit_ensemble_checksum.json");
    save(model, file.path.string());

    std::ifstream in(file.path);
    json j = json::parse(in);
    CHECK(j.at("checksum").get<std::string>() == model.model_id());
    CHECK(j.at("format_version").get<int>() == 1);

    SUBCASE("tampering with a payload field fails the checksum") {
        j["safety_factor"] = 1.11;
        std::ofstream out(file.path);
        out << j.dump(2);
        out.close();
        CHECK_THROWS_AS(load(file.path.string()), CorruptionError);
    }
    SUBCASE("tampering with the checksum itself fails") {
        j["checksum"] = "0000000000000000";
        std::ofstream out(file.path);
        out << j.dump(2);
        out.close();
        CHECK_THROWS_AS(load(file.path.string()), CorruptionError);
    }
    SUBCASE("unknown format_version wins over the checksum check") {
        j["format_version"] = 99; // checksum is now stale as well
        std::ofstream out(file.path);
        out << j.dump(2);
        out.close();
        CHECK_THROWS_AS(load(file.path.string()), VersionError);
    }
    SUBCASE("non-JSON content is corruption") {
        std::ofstream out(file.path);
        out << "definitely not json";
        out.close();
        CHECK_THROWS_AS(load(file.path.string()), CorruptionError);
    }
    SUBCASE("a missing required field is corruption") {
        j.erase("member_a");
        std::ofstream out(file.path);
        out << j.dump(2);
        out.close();
        CHECK_THROWS_AS(load(file.path.string()), CorruptionError);
    }
}

TEST_CASE("loading a missing file is an IO error") {
    CHECK_THROWS_AS(load("/nonexistent/model.json"), IoError);
}

TEST_CASE("model_id reacts to any parameter change") {
    EnsembleModel a = constant_ensemble(100, 200, 1.05);
    EnsembleModel b = constant_ensemble(100, 200, 1.06);
    EnsembleModel c = constant_ensemble(100, 201, 1.05);
    CHECK(a.model_id() != b.model_id());
    CHECK(a.model_id() != c.model_id());
    CHECK(a.model_id() == constant_ensemble(100, 200, 1.05).model_id());
    CHECK(a.model_id().size() == 16);
}
