#include "app_config.hpp"

#include <memfit/errors.hpp>
#include <memfit/util.hpp>

#include <nlohmann/json.hpp>

#include <fstream>
#include <sstream>

namespace memfit::cli {

namespace {

using nlohmann::json;

json read_json_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    try {
        return json::parse(buf.str());
    } catch (const json::exception& e) {
        throw ArgumentError("malformed JSON in " + path + ": " + e.what());
    }
}

void apply_member(const json& j, TrainConfig& cfg, bool& seed_set) {
    if (j.contains("n_trees")) cfg.n_trees = j.at("n_trees").get<int>();
    if (j.contains("learning_rate")) cfg.learning_rate = j.at("learning_rate").get<double>();
    if (j.contains("max_depth")) cfg.max_depth = j.at("max_depth").get<int>();
    if (j.contains("min_samples_leaf"))
        cfg.min_samples_leaf = j.at("min_samples_leaf").get<int>();
    if (j.contains("subsample")) cfg.subsample = j.at("subsample").get<double>();
    if (j.contains("colsample")) cfg.colsample = j.at("colsample").get<double>();
    if (j.contains("n_bins")) cfg.n_bins = j.at("n_bins").get<int>();
    if (j.contains("seed")) {
        cfg.seed = j.at("seed").get<std::uint64_t>();
        seed_set = true;
    }
}

} // namespace

void apply_config_file(AppConfig& cfg, const std::string& path) {
    const json j = read_json_file(path);
    if (!j.is_object()) throw ArgumentError("config file must hold a JSON object: " + path);
    try {
        if (j.contains("data")) cfg.data = j.at("data").get<std::string>();
        if (j.contains("mapping")) {
            const json& m = j.at("mapping");
            if (m.is_string()) {
                cfg.mapping_path = m.get<std::string>();
            } else if (m.is_object()) {
                for (const auto& [k, v] : m.items()) cfg.mapping[k] = v.get<std::string>();
            } else {
                throw ArgumentError("'mapping' must be an object or a path string");
            }
        }
        if (j.contains("holdout_fraction"))
            cfg.holdout_fraction = j.at("holdout_fraction").get<double>();
        if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
        if (j.contains("trials")) cfg.trials = j.at("trials").get<int>();
        if (j.contains("alpha")) cfg.alpha = j.at("alpha").get<double>();
        if (j.contains("safety_factor")) cfg.safety_factor = j.at("safety_factor").get<double>();
        if (j.contains("member_a")) apply_member(j.at("member_a"), cfg.member_a, cfg.member_a_seed_set);
        if (j.contains("member_b")) apply_member(j.at("member_b"), cfg.member_b, cfg.member_b_seed_set);
        if (j.contains("alpha_step")) cfg.alpha_step = j.at("alpha_step").get<double>();
        if (j.contains("s_step")) cfg.s_step = j.at("s_step").get<double>();
        if (j.contains("model")) cfg.model = j.at("model").get<std::string>();
        if (j.contains("input")) cfg.input = j.at("input").get<std::string>();
        if (j.contains("output")) cfg.output = j.at("output").get<std::string>();
        if (j.contains("out")) cfg.out = j.at("out").get<std::string>();
        if (j.contains("out_dir")) cfg.out_dir = j.at("out_dir").get<std::string>();
        if (j.contains("bind")) cfg.bind = j.at("bind").get<std::string>();
    } catch (const json::exception& e) {
        throw ArgumentError("invalid config value in " + path + ": " + e.what());
    }
}

ColumnMapping load_mapping_file(const std::string& path) {
    const json j = read_json_file(path);
    if (!j.is_object()) throw ArgumentError("mapping file must hold a JSON object: " + path);
    ColumnMapping mapping;
    try {
        for (const auto& [k, v] : j.items()) mapping[k] = v.get<std::string>();
    } catch (const json::exception& e) {
        throw ArgumentError("invalid mapping value in " + path + ": " + e.what());
    }
    return mapping;
}

void finalize_members(AppConfig& cfg) {
    cfg.member_a.alpha = cfg.alpha;
    cfg.member_b.alpha = cfg.alpha;
    std::uint64_t state = cfg.seed;
    const std::uint64_t derived_a = splitmix64(state);
    const std::uint64_t derived_b = splitmix64(state);
    if (!cfg.member_a_seed_set) cfg.member_a.seed = derived_a;
    if (!cfg.member_b_seed_set) cfg.member_b.seed = derived_b;
}

} // namespace memfit::cli
