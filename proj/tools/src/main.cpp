#include "app_config.hpp"
#include "commands.hpp"

#include <memfit/errors.hpp>

#include <CLI11.hpp>

#include <functional>
#include <iostream>
#include <string>

namespace {

using memfit::cli::AppConfig;

/// Raw flag storage; which flags were actually passed decides what overrides
/// the config file (precedence: flag > config > default).
struct FlagValues {
    std::string config_path;
    std::string data, mapping, model, input, output, out, out_dir, bind;
    double holdout_fraction = 0, alpha = 0, safety_factor = 0, alpha_step = 0, s_step = 0;
    std::uint64_t seed = 0;
    int trials = 0;
};

void add_common(CLI::App* sub, FlagValues& f) {
    sub->add_option("--config", f.config_path, "JSON config file; flags override its values");
    sub->add_option("--data", f.data, "telemetry CSV");
    sub->add_option("--mapping", f.mapping, "column-mapping JSON file (canonical -> source header)");
    sub->add_option("--holdout-fraction", f.holdout_fraction,
                    "chronological holdout fraction in (0,1)");
    sub->add_option("--seed", f.seed, "master RNG seed");
}

AppConfig resolve(const CLI::App* sub, const FlagValues& f) {
    AppConfig cfg;
    if (!f.config_path.empty()) memfit::cli::apply_config_file(cfg, f.config_path);
    auto passed = [&](const std::string& name) {
        const CLI::Option* opt = sub->get_option_no_throw(name);
        return opt != nullptr && opt->count() > 0;
    };
    if (passed("--data")) cfg.data = f.data;
    if (passed("--mapping")) cfg.mapping_path = f.mapping;
    if (passed("--holdout-fraction")) cfg.holdout_fraction = f.holdout_fraction;
    if (passed("--seed")) cfg.seed = f.seed;
    if (passed("--trials")) cfg.trials = f.trials;
    if (passed("--alpha")) cfg.alpha = f.alpha;
    if (passed("--safety-factor")) cfg.safety_factor = f.safety_factor;
    if (passed("--alpha-step")) cfg.alpha_step = f.alpha_step;
    if (passed("--s-step")) cfg.s_step = f.s_step;
    if (passed("--model")) cfg.model = f.model;
    if (passed("--input")) cfg.input = f.input;
    if (passed("--output")) cfg.output = f.output;
    if (passed("--out")) cfg.out = f.out;
    if (passed("--out-dir")) cfg.out_dir = f.out_dir;
    if (passed("--bind")) cfg.bind = f.bind;
    return cfg;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"memfit: predictive memory allocation for build clusters"};
    app.require_subcommand(1);

    FlagValues f;
    int exit_code = 0;

    auto make = [&](const char* name, const char* desc,
                    std::function<int(AppConfig)> run) -> CLI::App* {
        CLI::App* sub = app.add_subcommand(name, desc);
        add_common(sub, f);
        sub->callback([sub, run = std::move(run), &f, &exit_code] {
            exit_code = run(resolve(sub, f));
        });
        return sub;
    };

    make("ingest", "validate and summarize a telemetry CSV", memfit::cli::cmd_ingest);

    CLI::App* train =
        make("train", "train an ensemble and save the model file", memfit::cli::cmd_train);
    train->add_option("--out", f.out, "model file to write");
    train->add_option("--alpha", f.alpha, "quantile level, [0.90, 0.99]");
    train->add_option("--safety-factor", f.safety_factor, "safety multiplier, [1.00, 1.15]");

    CLI::App* tune = make("tune", "hyperparameter search with pooled-OOF cross-validation",
                          memfit::cli::cmd_tune);
    tune->add_option("--trials", f.trials, "number of trials");
    tune->add_option("--out", f.out, "trials-log CSV to write (best config lands next to it)");

    CLI::App* evaluate = make("evaluate", "holdout report for a model next to the baseline",
                              memfit::cli::cmd_evaluate);
    evaluate->add_option("--model", f.model, "model file");
    evaluate->add_option("--out", f.out, "also write the report JSON here");

    CLI::App* pareto = make("pareto", "sweep (alpha, s), export the frontier and named points",
                            memfit::cli::cmd_pareto);
    pareto->add_option("--alpha-step", f.alpha_step, "alpha grid step (default 0.01)");
    pareto->add_option("--s-step", f.s_step, "safety-factor grid step (default 0.01)");
    pareto->add_option("--out", f.out, "frontier table path (default <out-dir>/frontier.csv)");
    pareto->add_option("--out-dir", f.out_dir, "directory for models and manifest");

    CLI::App* predict =
        make("predict", "batch predictions for a telemetry CSV", memfit::cli::cmd_predict);
    predict->add_option("--model", f.model, "model file");
    predict->add_option("--input", f.input, "input telemetry CSV");
    predict->add_option("--output", f.output, "predictions CSV to write");

    CLI::App* serve = make("serve", "HTTP prediction service", memfit::cli::cmd_serve);
    serve->add_option("--model", f.model, "model file");
    serve->add_option("--bind", f.bind, "host:port (default 127.0.0.1:8080)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return exit_code;
}
