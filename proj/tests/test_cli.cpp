#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <memfit/dataset.hpp>
#include <memfit/ensemble.hpp>
#include <memfit/features.hpp>
#include <memfit/synthetic.hpp>
#include <memfit/util.hpp>

#include <nlohmann/json.hpp>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <sys/wait.h>
#include <unistd.h>

using namespace memfit;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

// End-to-end coverage of the installed binary: every check here spawns the
// executable named by MEMFIT_BIN and inspects its exit code, stdout, and the
// files it writes.

std::string binary() {
    const char* bin = std::getenv("MEMFIT_BIN");
    REQUIRE_MESSAGE(bin != nullptr, "MEMFIT_BIN must point at the CLI executable");
    return bin;
}

int run_cli(const std::string& args, std::string* output = nullptr) {
    const std::string cmd = "\"" + binary() + "\" " + args + " 2>&1";
    FILE* pipe = popen(cmd.c_str(), "r");
    REQUIRE(pipe != nullptr);
    std::string captured;
    char buf[4096];
    while (std::size_t got = std::fread(buf, 1, sizeof(buf), pipe)) captured.append(buf, got);
    const int status = pclose(pipe);
    if (output) *output = captured;
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_file(const fs::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    REQUIRE(out.good());
    out << content;
}

std::size_t line_count(const std::string& text) {
    std::size_t n = 0;
    for (const char c : text)
        if (c == '\n') ++n;
    return n;
}

struct Workspace {
    fs::path dir;
    fs::path data;

    Workspace() {
        dir = fs::temp_directory_path() / ("memfit_cli_" + std::to_string(getpid()));
        fs::create_directories(dir);
        data = dir / "data.csv";
        if (!fs::exists(data)) {
            const auto synth = generate_synthetic({.n_rows = 400, .seed = 77, .noise_sigma = 0.4});
            save_csv(synth.dataset(), data.string());
        }
    }

    std::string path(const std::string& name) const { return (dir / name).string(); }
};

const Workspace& ws() {
    static const Workspace w;
    return w;
}

} // namespace

TEST_CASE("ingest summarises the dataset") {
    std::string out;
    const int rc = run_cli("ingest --data " + ws().data.string(), &out);
    CHECK(rc == 0);
    const json j = json::parse(out);
    CHECK(j.at("rows_loaded") == 400);
    CHECK(j.at("rows_rejected") == 0);
    const json& range = j.at("time_range");
    REQUIRE(range.is_object());
    // ISO-8601 strings order chronologically.
    CHECK(range.at("min").get<std::string>() <= range.at("max").get<std::string>());
}

TEST_CASE("ingest applies a column-mapping file") {
    // Same content with the canonical `time` header renamed to `ts`.
    std::string content = read_file(ws().data);
    REQUIRE(content.rfind("time,", 0) == 0);
    write_file(ws().path("mapped.csv"), "ts," + content.substr(5));
    write_file(ws().path("mapping.json"), R"({"time": "ts"})");

    std::string out;
    CHECK(run_cli("ingest --data " + ws().path("mapped.csv"), &out) != 0);
    CHECK(out.find("error:") != std::string::npos);

    const int rc = run_cli("ingest --data " + ws().path("mapped.csv") + " --mapping " +
                               ws().path("mapping.json"),
                           &out);
    CHECK(rc == 0);
    CHECK(json::parse(out).at("rows_loaded") == 400);
}

TEST_CASE("train writes a loadable model and reports holdout metrics") {
    std::string out;
    const int rc = run_cli("train --data " + ws().data.string() + " --out " +
                               ws().path("model.json") +
                               " --alpha 0.93 --safety-factor 1.08 --seed 5",
                           &out);
    REQUIRE(rc == 0);

    const json j = json::parse(out);
    CHECK(j.at("alpha") == 0.93);
    CHECK(j.at("safety_factor") == 1.08);
    CHECK(j.at("train_rows") == 320);
    CHECK(j.at("holdout_rows") == 80);
    CHECK(j.at("holdout").contains("under_percent"));

    const EnsembleModel model = load(ws().path("model.json"));
    CHECK(model.alpha == 0.93);
    CHECK(model.safety_factor == 1.08);
    CHECK(model.model_id() == j.at("model_id").get<std::string>());

    // Member seeds chain off the global seed.
    std::uint64_t state = 5;
    CHECK(model.member_a.config.seed == splitmix64(state));
    CHECK(model.member_b.config.seed == splitmix64(state));
}

TEST_CASE("flags override the config file which overrides defaults") {
    const json cfg{{"data", ws().data.string()}, {"alpha", 0.91}, {"safety_factor", 1.02}};
    write_file(ws().path("cfg.json"), cfg.dump());

    std::string out;
    int rc = run_cli("train --config " + ws().path("cfg.json") + " --out " +
                         ws().path("m_config.json"),
                     &out);
    REQUIRE(rc == 0);
    CHECK(json::parse(out).at("alpha") == 0.91);
    CHECK(json::parse(out).at("safety_factor") == 1.02);

    rc = run_cli("train --config " + ws().path("cfg.json") + " --alpha 0.97 --out " +
                     ws().path("m_flag.json"),
                 &out);
    REQUIRE(rc == 0);
    CHECK(json::parse(out).at("alpha") == 0.97);
    CHECK(json::parse(out).at("safety_factor") == 1.02); // config still wins over default
}

TEST_CASE("evaluate reports model and baseline metrics") {
    REQUIRE(fs::exists(ws().path("model.json")));
    std::string out;
    const int rc = run_cli("evaluate --data " + ws().data.string() + " --model " +
                               ws().path("model.json") + " --out " + ws().path("eval.json"),
                           &out);
    REQUIRE(rc == 0);

    const json j = json::parse(out);
    CHECK(j.at("holdout_rows") == 80);
    CHECK(j.at("model").contains("under_percent"));
    CHECK(j.at("model").contains("over_percent"));
    CHECK(j.at("model").contains("cost"));
    CHECK(j.at("baseline").contains("under_percent"));

    CHECK(fs::exists(ws().path("eval.json")));
    const std::string histogram = read_file(ws().path("eval.json.model_histogram.csv"));
    CHECK(histogram.rfind("bin_label,count,fraction\n", 0) == 0);
    CHECK(fs::exists(ws().path("eval.json.baseline_histogram.csv")));
}

TEST_CASE("predict writes one allocation per input row") {
    REQUIRE(fs::exists(ws().path("model.json")));
    std::string out;
    const int rc = run_cli("predict --model " + ws().path("model.json") + " --input " +
                               ws().data.string() + " --output " + ws().path("preds.csv"),
                           &out);
    REQUIRE(rc == 0);
    CHECK(json::parse(out).at("rows") == 400);

    const std::string preds = read_file(ws().path("preds.csv"));
    CHECK(preds.rfind("row_id,time,allocation_mib,max_rss_mib\n", 0) == 0);
    CHECK(line_count(preds) == 401);

    // First prediction agrees with the library to printed precision.
    const EnsembleModel model = load(ws().path("model.json"));
    const Dataset ds = load_csv(ws().data.string(), {});
    const FeatureMatrix m = transform(ds, model.encoder, model.feature_schema);
    const std::vector<double> expected = predict_allocation_batch(model, m);

    const std::size_t header_end = preds.find('\n');
    const std::size_t line_end = preds.find('\n', header_end + 1);
    const std::string first = preds.substr(header_end + 1, line_end - header_end - 1);
    std::size_t comma = 0;
    for (int i = 0; i < 2; ++i) comma = first.find(',', comma + 1);
    const double got = std::stod(first.substr(comma + 1));
    CHECK(std::abs(got - expected[0]) <= 5e-7);
}

TEST_CASE("tune logs trials and emits a reusable best config") {
    std::string out;
    const int rc = run_cli("tune --data " + ws().data.string() + " --trials 3 --seed 9 --out " +
                               ws().path("trials.csv"),
                           &out);
    REQUIRE(rc == 0);

    const json j = json::parse(out);
    CHECK(j.at("trials") == 3);
    CHECK(j.at("best_trial_id").get<int>() >= 0);
    CHECK(j.at("best_trial_id").get<int>() < 3);

    const std::string log = read_file(ws().path("trials.csv"));
    CHECK(log.rfind("trial_id,", 0) == 0);
    CHECK(line_count(log) == 4);

    const json best = json::parse(read_file(ws().path("trials.csv.best.json")));
    CHECK(best.contains("alpha"));
    CHECK(best.contains("safety_factor"));
    CHECK(best.at("member_a").contains("n_trees"));
    CHECK(best.at("member_b").contains("seed"));

    // The emitted config round-trips straight into train.
    const int train_rc = run_cli("train --config " + ws().path("trials.csv.best.json") +
                                     " --data " + ws().data.string() + " --out " +
                                     ws().path("tuned.json"),
                                 &out);
    CHECK(train_rc == 0);
    CHECK(json::parse(out).at("alpha") == best.at("alpha"));
}

TEST_CASE("pareto sweeps the grid and saves the named models") {
    const json cfg{{"data", ws().data.string()},
                   {"member_a", {{"n_trees", 50}, {"max_depth", 3}, {"min_samples_leaf", 5}}},
                   {"member_b",
                    {{"n_trees", 50}, {"max_depth", 3}, {"min_samples_leaf", 5},
                     {"learning_rate", 0.2}}}};
    write_file(ws().path("pareto_cfg.json"), cfg.dump());

    std::string out;
    const int rc = run_cli("pareto --config " + ws().path("pareto_cfg.json") +
                               " --alpha-step 0.03 --s-step 0.05 --out-dir " + ws().path("front"),
                           &out);
    REQUIRE(rc == 0);

    const json j = json::parse(out);
    CHECK(j.at("n_points") == 16); // 4 alphas x 4 safety factors
    CHECK(j.at("n_frontier").get<std::size_t>() >= 1);

    const std::string table = read_file(ws().path("front/frontier.csv"));
    CHECK(table.rfind("alpha,s,under_fraction,over_percent,cost,is_frontier,named_role\n", 0) ==
          0);
    CHECK(line_count(table) == 17);

    for (const std::string role : {"balanced", "low_waste", "low_under"}) {
        REQUIRE(j.contains(role));
        const std::string model_file = j.at(role).at("model_file").get<std::string>();
        CHECK(fs::exists(model_file));
        const EnsembleModel model = load(model_file);
        CHECK(model.safety_factor == j.at(role).at("safety_factor").get<double>());
        CHECK(model.alpha == j.at(role).at("alpha").get<double>());
    }
    CHECK(fs::exists(ws().path("front/manifest.json")));
}

TEST_CASE("usage errors exit non-zero with a message") {
    std::string out;

    CHECK(run_cli("train --data " + ws().data.string(), &out) == 1);
    CHECK(out.find("error: no model output path") != std::string::npos);

    CHECK(run_cli("evaluate --data " + ws().data.string(), &out) == 1);
    CHECK(out.find("error: no model file") != std::string::npos);

    CHECK(run_cli("predict --model " + ws().path("model.json"), &out) == 1);
    CHECK(out.find("error:") != std::string::npos);

    CHECK(run_cli("ingest", &out) == 1);
    CHECK(out.find("error: no input data") != std::string::npos);

    CHECK(run_cli("ingest --data " + ws().path("does_not_exist.csv"), &out) == 1);
    CHECK(out.find("error:") != std::string::npos);

    CHECK(run_cli("serve --model " + ws().path("model.json") + " --bind nohost", &out) == 1);
    CHECK(out.find("error:") != std::string::npos);

    CHECK(run_cli("no-such-command", &out) != 0);
    CHECK(run_cli("", &out) != 0); // a subcommand is required
}
