#include "commands.hpp"

#include <memfit/csv.hpp>
#include <memfit/ensemble.hpp>
#include <memfit/errors.hpp>
#include <memfit/metrics.hpp>
#include <memfit/pareto.hpp>
#include <memfit/pipeline.hpp>
#include <memfit/service.hpp>
#include <memfit/timeutil.hpp>
#include <memfit/tuner.hpp>
#include <memfit/util.hpp>

#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace memfit::cli {

namespace {

using nlohmann::json;

ColumnMapping resolve_mapping(const AppConfig& cfg) {
    if (!cfg.mapping_path.empty()) return load_mapping_file(cfg.mapping_path);
    return cfg.mapping;
}

Dataset load_data(const AppConfig& cfg, IngestSummary* summary = nullptr) {
    if (cfg.data.empty()) throw ArgumentError("no input data; pass --data or set 'data' in the config");
    return load_csv(cfg.data, resolve_mapping(cfg), summary);
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write file: " + path);
    out << content;
    if (!out) throw IoError("failed writing file: " + path);
}

json member_json(const TrainConfig& c) {
    return json{{"n_trees", c.n_trees},
                {"learning_rate", c.learning_rate},
                {"max_depth", c.max_depth},
                {"min_samples_leaf", c.min_samples_leaf},
                {"subsample", c.subsample},
                {"colsample", c.colsample},
                {"n_bins", c.n_bins},
                {"seed", c.seed}};
}

json point_json(const OperatingPoint& p) {
    return json{{"alpha", p.alpha},
                {"safety_factor", p.safety_factor},
                {"under_fraction", p.under_fraction},
                {"under_percent", p.under_fraction * 100.0},
                {"over_percent", p.over_percent},
                {"cost", p.cost}};
}

} // namespace

int cmd_ingest(const AppConfig& cfg) {
    IngestSummary summary;
    const Dataset ds = load_data(cfg, &summary);
    std::cout << summary.to_json() << "\n";
    return ds.empty() ? 1 : 0;
}

int cmd_train(AppConfig cfg) {
    if (cfg.out.empty()) throw ArgumentError("no model output path; pass --out");
    finalize_members(cfg);
    cfg.member_a.validate_search_band();
    cfg.member_b.validate_search_band();

    const Dataset ds = load_data(cfg);
    const Prepared p = prepare(ds, cfg.holdout_fraction);
    EnsembleModel model = train_ensemble(p.train, cfg.member_a, cfg.member_b, cfg.safety_factor);
    model.feature_schema = p.schema;
    model.encoder = p.encoder;
    save(model, cfg.out);

    const std::vector<double> preds = predict_allocation_batch(model, p.holdout);
    const EvalReport holdout_report = evaluate(preds, p.holdout.target);

    json j;
    j["model_file"] = cfg.out;
    j["model_id"] = model.model_id();
    j["alpha"] = model.alpha;
    j["safety_factor"] = model.safety_factor;
    j["train_rows"] = p.train.n_rows;
    j["holdout_rows"] = p.holdout.n_rows;
    j["holdout"] = json::parse(holdout_report.to_json());
    std::cout << j.dump(2) << "\n";
    return 0;
}

int cmd_tune(AppConfig cfg) {
    if (cfg.out.empty()) throw ArgumentError("no trials-log path; pass --out");
    const Dataset ds = load_data(cfg);
    const Prepared p = prepare(ds, cfg.holdout_fraction);
    const SearchSpace space = SearchSpace::default_space();
    const SearchResult result = run_search(p.train, space, cfg.trials, cfg.seed);

    write_file(cfg.out, trials_log_csv(space, result.history));

    // The winning assignment, in the shape `train --config` consumes.
    const EnsembleParams best = configs_from_params(
        result.best.params, [&] {
            std::uint64_t state = cfg.seed;
            std::uint64_t trial_seed = 0;
            for (int t = 0; t <= result.best.trial_id; ++t) trial_seed = splitmix64(state);
            return trial_seed;
        }());
    json best_json;
    best_json["alpha"] = best.cfg_a.alpha;
    best_json["safety_factor"] = best.safety_factor;
    best_json["member_a"] = member_json(best.cfg_a);
    best_json["member_b"] = member_json(best.cfg_b);
    const std::string best_path = cfg.out + ".best.json";
    write_file(best_path, best_json.dump(2) + "\n");

    json j;
    j["trials"] = result.history.size();
    j["trials_log"] = cfg.out;
    j["best_config"] = best_path;
    j["best_trial_id"] = result.best.trial_id;
    j["best_cost"] = result.best.cost;
    j["best_under_fraction"] = result.best.under_fraction;
    j["best_over_ratio"] = result.best.over_ratio;
    std::cout << j.dump(2) << "\n";
    return 0;
}

int cmd_evaluate(const AppConfig& cfg) {
    if (cfg.model.empty()) throw ArgumentError("no model file; pass --model");
    const EnsembleModel model = load(cfg.model);
    const Dataset ds = load_data(cfg);
    auto [train_ds, holdout_ds] = temporal_split(ds, cfg.holdout_fraction);

    // Features come from the persisted schema and encoder state, never refit.
    const FeatureMatrix full = transform(ds, model.encoder, model.feature_schema);
    const FeatureMatrix holdout = full.slice(train_ds.size(), full.n_rows);

    const auto t0 = std::chrono::steady_clock::now();
    const std::vector<double> preds = predict_allocation_batch(model, holdout);
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    const EvalReport model_report =
        evaluate(preds, holdout.target, elapsed / static_cast<double>(holdout.n_rows));
    const EvalReport base_report = baseline_report(holdout_ds);

    json j;
    j["model_id"] = model.model_id();
    j["holdout_rows"] = holdout.n_rows;
    j["model"] = json::parse(model_report.to_json());
    j["baseline"] = json::parse(base_report.to_json());
    std::cout << j.dump(2) << "\n";

    if (!cfg.out.empty()) {
        write_file(cfg.out, j.dump(2) + "\n");
        write_file(cfg.out + ".model_histogram.csv", model_report.histogram_csv());
        write_file(cfg.out + ".baseline_histogram.csv", base_report.histogram_csv());
    }
    return 0;
}

int cmd_pareto(AppConfig cfg) {
    finalize_members(cfg);
    cfg.member_a.validate_search_band();
    cfg.member_b.validate_search_band();

    const Dataset ds = load_data(cfg);
    const Prepared p = prepare(ds, cfg.holdout_fraction);

    const std::vector<double> alpha_grid = make_grid(0.90, 0.99, cfg.alpha_step);
    const std::vector<double> s_grid = make_grid(1.00, 1.15, cfg.s_step);
    SweepResult result = sweep(p.train, p.holdout, cfg.member_a, cfg.member_b, alpha_grid, s_grid);
    const std::vector<std::size_t> frontier = non_dominated(result.points);
    const NamedPoints named = select_named(result.points, frontier);

    std::error_code ec;
    std::filesystem::create_directories(cfg.out_dir, ec);
    const std::string table_path =
        cfg.out.empty() ? cfg.out_dir + "/frontier.csv" : cfg.out;
    write_file(table_path, frontier_csv(result.points, frontier, named));

    json manifest;
    manifest["frontier_table"] = table_path;
    manifest["n_points"] = result.points.size();
    manifest["n_frontier"] = frontier.size();
    const std::vector<std::pair<std::string, std::size_t>> roles = {
        {"balanced", named.balanced}, {"low_waste", named.low_waste}, {"low_under", named.low_under}};
    for (const auto& [role, idx] : roles) {
        const OperatingPoint& point = result.points[idx];
        EnsembleModel model = result.models[point.model_index];
        model.safety_factor = point.safety_factor;
        model.feature_schema = p.schema;
        model.encoder = p.encoder;
        const std::string path = cfg.out_dir + "/model_" + role + ".json";
        save(model, path);
        json entry = point_json(point);
        entry["model_file"] = path;
        manifest[role] = std::move(entry);
    }
    const std::string manifest_path = cfg.out_dir + "/manifest.json";
    write_file(manifest_path, manifest.dump(2) + "\n");
    std::cout << manifest.dump(2) << "\n";
    return 0;
}

int cmd_predict(const AppConfig& cfg) {
    if (cfg.model.empty()) throw ArgumentError("no model file; pass --model");
    if (cfg.input.empty()) throw ArgumentError("no input file; pass --input");
    if (cfg.output.empty()) throw ArgumentError("no output file; pass --output");

    const EnsembleModel model = load(cfg.model);
    AppConfig data_cfg = cfg;
    data_cfg.data = cfg.input;
    const Dataset ds = load_data(data_cfg);
    const FeatureMatrix m = transform(ds, model.encoder, model.feature_schema);
    const std::vector<double> preds = predict_allocation_batch(model, m);

    std::string out = "row_id,time,allocation_mib,max_rss_mib\n";
    char buf[40];
    auto fmt = [&](double v) {
        std::snprintf(buf, sizeof(buf), "%.6f", v);
        return std::string(buf);
    };
    for (std::size_t i = 0; i < ds.size(); ++i) {
        out += csv_join({std::to_string(i), format_iso8601(ds[i].time), fmt(preds[i]),
                         fmt(ds[i].max_rss)});
        out += '\n';
    }
    write_file(cfg.output, out);

    json j;
    j["rows"] = ds.size();
    j["output"] = cfg.output;
    j["model_id"] = model.model_id();
    std::cout << j.dump(2) << "\n";
    return 0;
}

int cmd_serve(const AppConfig& cfg) {
    if (cfg.model.empty()) throw ArgumentError("no model file; pass --model");
    const auto [host, port] = parse_bind_address(cfg.bind);
    PredictionService service(load(cfg.model));
    std::cout << "{\"serving\": \"" << host << ":" << port << "\", \"model_id\": \""
              << service.model_id() << "\"}" << std::endl;
    if (!service.serve(host, port)) {
        std::cerr << "error: cannot bind " << cfg.bind << "\n";
        return 1;
    }
    return 0;
}

} // namespace memfit::cli
