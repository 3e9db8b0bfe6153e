#pragma once

#include <memfit/dataset.hpp>
#include <memfit/gbdt.hpp>

#include <cstdint>
#include <string>

namespace memfit::cli {

/// Everything the subcommands consume. Values resolve with precedence
/// flag > config file > default.
struct AppConfig {
    std::string data;
    std::string mapping_path;
    ColumnMapping mapping;

    double holdout_fraction = 0.2;
    std::uint64_t seed = 1;
    int trials = 50;

    double alpha = 0.95;
    double safety_factor = 1.05;
    TrainConfig member_a;
    TrainConfig member_b;
    bool member_a_seed_set = false;
    bool member_b_seed_set = false;

    double alpha_step = 0.01;
    double s_step = 0.01;

    std::string model;
    std::string input;
    std::string output;
    std::string out;
    std::string out_dir = ".";
    std::string bind = "127.0.0.1:8080";
};

/// Parses the JSON config file into cfg (missing keys keep prior values).
void apply_config_file(AppConfig& cfg, const std::string& path);

/// Loads a column-mapping JSON object file.
ColumnMapping load_mapping_file(const std::string& path);

/// Member configs with alpha shared and seeds derived from the global seed
/// when the config file did not pin them.
void finalize_members(AppConfig& cfg);

} // namespace memfit::cli
