#include "memfit/ensemble.hpp"

#include "memfit/errors.hpp"
#include "memfit/timeutil.hpp"
#include "memfit/util.hpp"

#include "json_io.hpp"

#include <algorithm>
#include <ctime>
#include <fstream>
#include <sstream>

namespace memfit {

namespace {

constexpr int kFormatVersion = 1;

nlohmann::json config_to_json(const TrainConfig& c) {
    nlohmann::json j;
    j["alpha"] = c.alpha;
    j["n_trees"] = c.n_trees;
    j["learning_rate"] = c.learning_rate;
    j["max_depth"] = c.max_depth;
    j["min_samples_leaf"] = c.min_samples_leaf;
    j["subsample"] = c.subsample;
    j["colsample"] = c.colsample;
    j["n_bins"] = c.n_bins;
    j["seed"] = c.seed;
    return j;
}

TrainConfig config_from_json(const nlohmann::json& j) {
    TrainConfig c;
    c.alpha = j.at("alpha").get<double>();
    c.n_trees = j.at("n_trees").get<int>();
    c.learning_rate = j.at("learning_rate").get<double>();
    c.max_depth = j.at("max_depth").get<int>();
    c.min_samples_leaf = j.at("min_samples_leaf").get<int>();
    c.subsample = j.at("subsample").get<double>();
    c.colsample = j.at("colsample").get<double>();
    c.n_bins = j.at("n_bins").get<int>();
    c.seed = j.at("seed").get<std::uint64_t>();
    return c;
}

nlohmann::json member_to_json(const QuantileModel& m) {
    nlohmann::json j;
    j["base_score"] = m.base_score;
    j["learning_rate"] = m.learning_rate;
    j["alpha"] = m.alpha;
    j["n_features"] = m.n_features;
    j["feature_schema_hash"] = m.feature_schema_hash;
    j["columns"] = m.columns;
    j["importances"] = m.importances;
    j["training_loss"] = m.training_loss;
    j["config"] = config_to_json(m.config);
    // Nodes as flat [feature, threshold, left, right, value] tuples.
    nlohmann::json trees = nlohmann::json::array();
    for (const auto& tree : m.trees) {
        nlohmann::json nodes = nlohmann::json::array();
        for (const auto& n : tree.nodes)
            nodes.push_back({n.feature, n.threshold, n.left, n.right, n.value});
        trees.push_back(std::move(nodes));
    }
    j["trees"] = std::move(trees);
    return j;
}

QuantileModel member_from_json(const nlohmann::json& j) {
    QuantileModel m;
    m.base_score = j.at("base_score").get<double>();
    m.learning_rate = j.at("learning_rate").get<double>();
    m.alpha = j.at("alpha").get<double>();
    m.n_features = j.at("n_features").get<std::size_t>();
    m.feature_schema_hash = j.at("feature_schema_hash").get<std::uint64_t>();
    m.columns = j.at("columns").get<std::vector<std::string>>();
    m.importances = j.at("importances").get<std::vector<double>>();
    m.training_loss = j.at("training_loss").get<std::vector<double>>();
    m.config = config_from_json(j.at("config"));
    for (const auto& nodes : j.at("trees")) {
        RegressionTree tree;
        for (const auto& t : nodes) {
            TreeNode n;
            n.feature = t.at(0).get<std::int32_t>();
            n.threshold = t.at(1).get<double>();
            n.left = t.at(2).get<std::int32_t>();
            n.right = t.at(3).get<std::int32_t>();
            n.value = t.at(4).get<double>();
            tree.nodes.push_back(n);
        }
        m.trees.push_back(std::move(tree));
    }
    return m;
}

/// Everything except the checksum field; its canonical dump is what the
/// checksum covers.
nlohmann::json payload_json(const EnsembleModel& model) {
    nlohmann::json j;
    j["format_version"] = kFormatVersion;
    j["created_at"] = model.created_at;
    j["alpha"] = model.alpha;
    j["safety_factor"] = model.safety_factor;
    j["prediction_floor"] = model.prediction_floor;
    j["train_data_digest"] = model.train_data_digest;
    j["feature_schema"] = detail::schema_to_json(model.feature_schema);
    j["encoder_state"] = detail::encoder_to_json(model.encoder);
    j["member_a"] = member_to_json(model.member_a);
    j["member_b"] = member_to_json(model.member_b);
    return j;
}

} // namespace

std::string EnsembleModel::model_id() const { return to_hex(fnv1a64(payload_json(*this).dump())); }

EnsembleModel train_ensemble(const FeatureMatrix& train, const TrainConfig& cfg_a,
                             const TrainConfig& cfg_b, double safety_factor) {
    if (cfg_a.alpha != cfg_b.alpha)
        throw ArgumentError("ensemble members must share one alpha");
    if (!(safety_factor >= 1.00 && safety_factor <= 1.15))
        throw ArgumentError("safety_factor must be within [1.00, 1.15]");
    EnsembleModel model;
    model.member_a = fit(train, cfg_a);
    model.member_b = fit(train, cfg_b);
    model.alpha = cfg_a.alpha;
    model.safety_factor = safety_factor;
    model.created_at = format_iso8601(static_cast<std::int64_t>(std::time(nullptr)));
    model.train_data_digest = train.digest();
    return model;
}

double predict_allocation(const EnsembleModel& model, std::span<const double> row) {
    const double a = predict(model.member_a, row);
    const double b = predict(model.member_b, row);
    const double scaled = std::max(a, b) * model.safety_factor;
    return std::max(scaled, model.prediction_floor);
}

std::vector<double> predict_allocation_batch(const EnsembleModel& model,
                                             const FeatureMatrix& features) {
    std::vector<double> out(features.n_rows);
    for (std::size_t i = 0; i < features.n_rows; ++i)
        out[i] = predict_allocation(model, features.row(i));
    return out;
}

void save(const EnsembleModel& model, const std::string& path) {
    nlohmann::json j = payload_json(model);
    j["checksum"] = to_hex(fnv1a64(j.dump()));
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write model file: " + path);
    out << j.dump(2) << '\n';
    if (!out) throw IoError("failed writing model file: " + path);
}

EnsembleModel load(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read model file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();

    nlohmann::json j;
    try {
        j = nlohmann::json::parse(buf.str());
    } catch (const nlohmann::json::exception& e) {
        throw CorruptionError(std::string("malformed model file: ") + e.what());
    }
    if (!j.is_object() || !j.contains("format_version"))
        throw CorruptionError("model file lacks format_version");
    const auto version = j.at("format_version");
    if (!version.is_number_integer() || version.get<int>() != kFormatVersion)
        throw VersionError("unsupported model format_version: " + version.dump());
    if (!j.contains("checksum") || !j.at("checksum").is_string())
        throw CorruptionError("model file lacks a checksum");
    const std::string stored = j.at("checksum").get<std::string>();
    j.erase("checksum");
    const std::string actual = to_hex(fnv1a64(j.dump()));
    if (stored != actual)
        throw CorruptionError("model file checksum mismatch (stored " + stored + ", computed " +
                              actual + ")");

    try {
        EnsembleModel model;
        model.created_at = j.at("created_at").get<std::string>();
        model.alpha = j.at("alpha").get<double>();
        model.safety_factor = j.at("safety_factor").get<double>();
        model.prediction_floor = j.at("prediction_floor").get<double>();
        model.train_data_digest = j.at("train_data_digest").get<std::string>();
        model.feature_schema = detail::schema_from_json_obj(j.at("feature_schema"));
        model.encoder = detail::encoder_from_json_obj(j.at("encoder_state"));
        model.member_a = member_from_json(j.at("member_a"));
        model.member_b = member_from_json(j.at("member_b"));
        return model;
    } catch (const nlohmann::json::exception& e) {
        throw CorruptionError(std::string("invalid model payload: ") + e.what());
    }
}

} // namespace memfit
