#pragma once

#include "memfit/ensemble.hpp"
#include "memfit/features.hpp"
#include "memfit/gbdt.hpp"
#include "memfit/util.hpp"

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <variant>
#include <vector>

namespace memfit {

enum class ParamKind { Uniform, LogUniform, IntUniform, Categorical };

struct ParamSpec {
    ParamKind kind = ParamKind::Uniform;
    double lo = 0.0; ///< inclusive numeric bounds
    double hi = 0.0;
    std::vector<std::string> categories;
};

struct SearchSpace {
    std::map<std::string, ParamSpec> params;

    /// The production space: shared alpha and safety_factor plus both
    /// members' TrainConfig ranges under "a_"/"b_" prefixes (14 parameters).
    static SearchSpace default_space();

    void validate() const;
};

using ParamValue = std::variant<double, std::int64_t, std::string>;
using ParamMap = std::map<std::string, ParamValue>;

double param_as_double(const ParamValue& v);
std::int64_t param_as_int(const ParamValue& v);
std::string param_to_string(const ParamValue& v);

struct FoldDiag {
    std::size_t n_rows = 0;
    double under_fraction = 0.0;
    double over_ratio = 0.0;
};

struct Trial {
    int trial_id = 0;
    ParamMap params;
    double cost = 0.0; ///< +inf for failed trials; computed once on pooled OOF predictions
    double under_fraction = 0.0;
    double over_ratio = 0.0;
    std::vector<FoldDiag> folds;
    double wall_time_seconds = 0.0;
    bool failed = false;
    std::string error;
};

struct TunerOptions {
    int n_startup_trials = 10;
    double gamma = 0.25; ///< fraction of history forming the "good" set
    int n_candidates = 24;
};

struct TunerState {
    explicit TunerState(std::uint64_t seed, TunerOptions options = {})
        : options(options), rng(seed) {}

    TunerOptions options;
    std::vector<Trial> history; ///< append-only
    Rng rng;
};

/// One sample from the prior (uniform / log-uniform within bounds).
ParamMap sample_prior(Rng& rng, const SearchSpace& space);

/// TPE suggestion: prior samples for the first n_startup_trials, then the
/// per-parameter good/bad density-ratio argmax over n_candidates draws from
/// the good model. Deterministic given state.
ParamMap suggest(TunerState& state, const SearchSpace& space);

/// Member configurations and safety factor from a sampled assignment; member
/// seeds derive from trial_seed via SplitMix64.
struct EnsembleParams {
    TrainConfig cfg_a;
    TrainConfig cfg_b;
    double safety_factor = 1.0;
};

EnsembleParams configs_from_params(const ParamMap& params, std::uint64_t trial_seed);

/// Contiguous fold boundaries: k blocks [lo, hi) covering [0, n).
std::vector<std::pair<std::size_t, std::size_t>> fold_boundaries(std::size_t n, int k);

/// 3-fold pooled-OOF evaluation: trains on two folds, predicts the third,
/// then scores the concatenated predictions once. Throws ArgumentError when
/// any fold would be empty.
Trial evaluate_trial(const ParamMap& params, const FeatureMatrix& train,
                     std::uint64_t trial_seed = 0);

using TrialObjective = std::function<Trial(const ParamMap& params, std::uint64_t trial_seed)>;

struct SearchResult {
    Trial best;
    std::vector<Trial> history;
};

/// suggest -> objective loop. A throwing objective records a failed trial
/// with +inf cost and the search continues.
SearchResult run_search(const SearchSpace& space, int n_trials, std::uint64_t seed,
                        const TrialObjective& objective, TunerOptions options = {});

/// Production search over the training matrix via evaluate_trial.
SearchResult run_search(const FeatureMatrix& train, const SearchSpace& space, int n_trials,
                        std::uint64_t seed, TunerOptions options = {});

/// Pure prior sampling every trial; the baseline the TPE must beat.
SearchResult run_random_search(const SearchSpace& space, int n_trials, std::uint64_t seed,
                               const TrialObjective& objective);

/// Append-only delimiter-separated history table
/// (trial_id, parameters..., cost, under, over, wall_time).
std::string trials_log_csv(const SearchSpace& space, const std::vector<Trial>& history);

} // namespace memfit
