#include "memfit/tuner.hpp"

#include "memfit/csv.hpp"
#include "memfit/errors.hpp"
#include "memfit/metrics.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numbers>

namespace memfit {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void add_member_params(SearchSpace& space, const std::string& prefix) {
    space.params[prefix + "n_trees"] = {ParamKind::IntUniform, 50, 600, {}};
    space.params[prefix + "learning_rate"] = {ParamKind::LogUniform, 0.01, 0.3, {}};
    space.params[prefix + "max_depth"] = {ParamKind::IntUniform, 3, 12, {}};
    space.params[prefix + "min_samples_leaf"] = {ParamKind::IntUniform, 5, 100, {}};
    space.params[prefix + "subsample"] = {ParamKind::Uniform, 0.5, 1.0, {}};
    space.params[prefix + "colsample"] = {ParamKind::Uniform, 0.5, 1.0, {}};
}

ParamValue sample_param(Rng& rng, const ParamSpec& spec) {
    switch (spec.kind) {
    case ParamKind::Uniform:
        return rng.uniform(spec.lo, spec.hi);
    case ParamKind::LogUniform:
        return std::exp(rng.uniform(std::log(spec.lo), std::log(spec.hi)));
    case ParamKind::IntUniform:
        return rng.uniform_int(static_cast<std::int64_t>(spec.lo),
                               static_cast<std::int64_t>(spec.hi));
    case ParamKind::Categorical: {
        const auto i = rng.uniform_int(0, static_cast<std::int64_t>(spec.categories.size()) - 1);
        return spec.categories[static_cast<std::size_t>(i)];
    }
    }
    throw ArgumentError("unknown parameter kind");
}

/// Numeric value in the space the KDE operates in (log for log-uniform).
double to_model_space(const ParamSpec& spec, const ParamValue& v) {
    const double x = param_as_double(v);
    return spec.kind == ParamKind::LogUniform ? std::log(x) : x;
}

double gauss_pdf(double x, double mu, double sigma) {
    const double u = (x - mu) / sigma;
    return std::exp(-0.5 * u * u) / (sigma * std::sqrt(2.0 * std::numbers::pi));
}

// Parzen mixture over the observations plus one domain-wide prior component.
// Each observation kernel's bandwidth is its larger gap to the adjacent
// observations, clipped into [span/min(100, n+1), span]: tight clusters get
// narrow kernels in the good and bad models alike (so a contested region
// cannot keep an inflated density ratio), sparse regions stay smooth, and the
// floor relaxes only as evidence accumulates. The prior component keeps a
// share of candidate draws exploring the whole range.
struct ParzenMixture {
    std::vector<double> mus;
    std::vector<double> sigmas;
    double prior_mu;
    double prior_sigma;

    static ParzenMixture fit(std::vector<double> values, double tlo, double thi) {
        ParzenMixture m;
        m.prior_mu = (tlo + thi) / 2.0;
        m.prior_sigma = thi - tlo;
        std::sort(values.begin(), values.end());
        const std::size_t n = values.size();
        const double floor =
            m.prior_sigma / std::min(100.0, static_cast<double>(n) + 1.0);
        m.mus = std::move(values);
        m.sigmas.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            double gap = m.prior_sigma;
            if (n > 1) {
                gap = 0.0;
                if (i > 0) gap = std::max(gap, m.mus[i] - m.mus[i - 1]);
                if (i + 1 < n) gap = std::max(gap, m.mus[i + 1] - m.mus[i]);
            }
            m.sigmas[i] = std::clamp(gap, floor, m.prior_sigma);
        }
        return m;
    }

    double density(double x) const {
        double acc = gauss_pdf(x, prior_mu, prior_sigma);
        for (std::size_t i = 0; i < mus.size(); ++i) acc += gauss_pdf(x, mus[i], sigmas[i]);
        return acc / static_cast<double>(mus.size() + 1);
    }

    double sample(Rng& rng) const {
        const auto idx = rng.uniform_int(0, static_cast<std::int64_t>(mus.size()));
        if (idx == static_cast<std::int64_t>(mus.size()))
            return prior_mu + prior_sigma * rng.normal();
        const auto i = static_cast<std::size_t>(idx);
        return mus[i] + sigmas[i] * rng.normal();
    }
};

ParamValue suggest_numeric(Rng& rng, const ParamSpec& spec, const std::vector<double>& good,
                           const std::vector<double>& bad, int n_candidates) {
    const double tlo = spec.kind == ParamKind::LogUniform ? std::log(spec.lo) : spec.lo;
    const double thi = spec.kind == ParamKind::LogUniform ? std::log(spec.hi) : spec.hi;
    const ParzenMixture g = ParzenMixture::fit(good, tlo, thi);
    const ParzenMixture b = ParzenMixture::fit(bad, tlo, thi);

    double best_t = tlo;
    double best_ratio = -kInf;
    for (int c = 0; c < n_candidates; ++c) {
        double t = std::clamp(g.sample(rng), tlo, thi);
        if (spec.kind == ParamKind::IntUniform)
            t = static_cast<double>(std::llround(t));
        const double ratio = g.density(t) / std::max(b.density(t), 1e-300);
        if (ratio > best_ratio) {
            best_ratio = ratio;
            best_t = t;
        }
    }

    switch (spec.kind) {
    case ParamKind::LogUniform:
        return std::clamp(std::exp(best_t), spec.lo, spec.hi);
    case ParamKind::IntUniform:
        return static_cast<std::int64_t>(std::llround(best_t));
    default:
        return best_t;
    }
}

ParamValue suggest_categorical(Rng& rng, const ParamSpec& spec,
                               const std::vector<std::string>& good,
                               const std::vector<std::string>& bad, int n_candidates) {
    const std::size_t k = spec.categories.size();
    auto smoothed = [&](const std::vector<std::string>& set, std::vector<double>& probs) {
        probs.assign(k, 0.0);
        for (const auto& v : set) {
            const auto it = std::find(spec.categories.begin(), spec.categories.end(), v);
            if (it != spec.categories.end())
                probs[static_cast<std::size_t>(it - spec.categories.begin())] += 1.0;
        }
        const double denom = static_cast<double>(set.size()) + static_cast<double>(k);
        for (auto& p : probs) p = (p + 1.0) / denom;
    };
    std::vector<double> pg, pb;
    smoothed(good, pg);
    smoothed(bad, pb);

    std::size_t best = 0;
    double best_ratio = -kInf;
    for (int c = 0; c < n_candidates; ++c) {
        const double u = rng.uniform01();
        double cum = 0.0;
        std::size_t pick = k - 1;
        for (std::size_t i = 0; i < k; ++i) {
            cum += pg[i];
            if (u < cum) {
                pick = i;
                break;
            }
        }
        const double ratio = pg[pick] / pb[pick];
        if (ratio > best_ratio) {
            best_ratio = ratio;
            best = pick;
        }
    }
    return spec.categories[best];
}

} // namespace

SearchSpace SearchSpace::default_space() {
    SearchSpace space;
    space.params["alpha"] = {ParamKind::Uniform, 0.90, 0.99, {}};
    space.params["safety_factor"] = {ParamKind::Uniform, 1.00, 1.15, {}};
    add_member_params(space, "a_");
    add_member_params(space, "b_");
    return space;
}

void SearchSpace::validate() const {
    if (params.empty()) throw ArgumentError("search space is empty");
    for (const auto& [name, spec] : params) {
        if (spec.kind == ParamKind::Categorical) {
            if (spec.categories.empty())
                throw ArgumentError("categorical parameter without categories: " + name);
            continue;
        }
        if (!std::isfinite(spec.lo) || !std::isfinite(spec.hi) || !(spec.lo < spec.hi))
            throw ArgumentError("invalid bounds for parameter: " + name);
        if (spec.kind == ParamKind::LogUniform && spec.lo <= 0.0)
            throw ArgumentError("log-uniform bounds must be positive: " + name);
    }
}

double param_as_double(const ParamValue& v) {
    if (const auto* d = std::get_if<double>(&v)) return *d;
    if (const auto* i = std::get_if<std::int64_t>(&v)) return static_cast<double>(*i);
    throw ArgumentError("parameter is not numeric");
}

std::int64_t param_as_int(const ParamValue& v) {
    if (const auto* i = std::get_if<std::int64_t>(&v)) return *i;
    if (const auto* d = std::get_if<double>(&v)) return std::llround(*d);
    throw ArgumentError("parameter is not numeric");
}

std::string param_to_string(const ParamValue& v) {
    if (const auto* s = std::get_if<std::string>(&v)) return *s;
    if (const auto* i = std::get_if<std::int64_t>(&v)) return std::to_string(*i);
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.10g", std::get<double>(v));
    return buf;
}

ParamMap sample_prior(Rng& rng, const SearchSpace& space) {
    ParamMap out;
    for (const auto& [name, spec] : space.params) out[name] = sample_param(rng, spec);
    return out;
}

ParamMap suggest(TunerState& state, const SearchSpace& space) {
    space.validate();
    const std::size_t n = state.history.size();
    if (n < static_cast<std::size_t>(state.options.n_startup_trials) || n < 2)
        return sample_prior(state.rng, space);

    // Rank whole trials once; the same good/bad membership is used for every
    // parameter.
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (state.history[a].cost != state.history[b].cost)
            return state.history[a].cost < state.history[b].cost;
        return state.history[a].trial_id < state.history[b].trial_id;
    });
    std::size_t n_good =
        static_cast<std::size_t>(guarded_ceil(state.options.gamma * static_cast<double>(n)));
    n_good = std::clamp<std::size_t>(n_good, 1, n - 1);

    ParamMap out;
    for (const auto& [name, spec] : space.params) {
        if (spec.kind == ParamKind::Categorical) {
            std::vector<std::string> good, bad;
            for (std::size_t r = 0; r < n; ++r) {
                const auto& val = state.history[order[r]].params.at(name);
                (r < n_good ? good : bad).push_back(std::get<std::string>(val));
            }
            out[name] =
                suggest_categorical(state.rng, spec, good, bad, state.options.n_candidates);
        } else {
            std::vector<double> good, bad;
            for (std::size_t r = 0; r < n; ++r) {
                const auto& val = state.history[order[r]].params.at(name);
                (r < n_good ? good : bad).push_back(to_model_space(spec, val));
            }
            out[name] = suggest_numeric(state.rng, spec, good, bad, state.options.n_candidates);
        }
    }
    return out;
}

EnsembleParams configs_from_params(const ParamMap& params, std::uint64_t trial_seed) {
    auto need = [&](const std::string& key) -> const ParamValue& {
        const auto it = params.find(key);
        if (it == params.end()) throw ArgumentError("missing parameter: " + key);
        return it->second;
    };
    EnsembleParams out;
    const double alpha = param_as_double(need("alpha"));
    out.safety_factor = param_as_double(need("safety_factor"));

    std::uint64_t seed_state = trial_seed;
    auto fill = [&](const std::string& prefix, TrainConfig& cfg) {
        cfg.alpha = alpha;
        cfg.n_trees = static_cast<int>(param_as_int(need(prefix + "n_trees")));
        cfg.learning_rate = param_as_double(need(prefix + "learning_rate"));
        cfg.max_depth = static_cast<int>(param_as_int(need(prefix + "max_depth")));
        cfg.min_samples_leaf = static_cast<int>(param_as_int(need(prefix + "min_samples_leaf")));
        cfg.subsample = param_as_double(need(prefix + "subsample"));
        cfg.colsample = param_as_double(need(prefix + "colsample"));
        cfg.seed = splitmix64(seed_state);
    };
    fill("a_", out.cfg_a);
    fill("b_", out.cfg_b);
    return out;
}

std::vector<std::pair<std::size_t, std::size_t>> fold_boundaries(std::size_t n, int k) {
    if (k < 1) throw ArgumentError("fold count must be positive");
    std::vector<std::pair<std::size_t, std::size_t>> out;
    const auto uk = static_cast<std::size_t>(k);
    for (std::size_t f = 0; f < uk; ++f)
        out.emplace_back(f * n / uk, (f + 1) * n / uk);
    return out;
}

Trial evaluate_trial(const ParamMap& params, const FeatureMatrix& train,
                     std::uint64_t trial_seed) {
    const auto t0 = std::chrono::steady_clock::now();
    const EnsembleParams ep = configs_from_params(params, trial_seed);
    const auto folds = fold_boundaries(train.n_rows, 3);
    for (const auto& [lo, hi] : folds)
        if (lo == hi) throw ArgumentError("too few rows for 3-fold evaluation");

    Trial trial;
    trial.params = params;
    std::vector<double> oof_preds, oof_actuals;
    oof_preds.reserve(train.n_rows);
    oof_actuals.reserve(train.n_rows);

    for (const auto& [lo, hi] : folds) {
        std::vector<std::size_t> train_rows;
        train_rows.reserve(train.n_rows - (hi - lo));
        for (std::size_t i = 0; i < train.n_rows; ++i)
            if (i < lo || i >= hi) train_rows.push_back(i);

        const FeatureMatrix fit_m = train.select(train_rows);
        const FeatureMatrix fold_m = train.slice(lo, hi);
        const EnsembleModel model = train_ensemble(fit_m, ep.cfg_a, ep.cfg_b, ep.safety_factor);
        const std::vector<double> preds = predict_allocation_batch(model, fold_m);

        FoldDiag diag;
        diag.n_rows = fold_m.n_rows;
        diag.under_fraction = underallocation_fraction(preds, fold_m.target);
        diag.over_ratio = overallocation_ratio(preds, fold_m.target);
        trial.folds.push_back(diag);

        oof_preds.insert(oof_preds.end(), preds.begin(), preds.end());
        oof_actuals.insert(oof_actuals.end(), fold_m.target.begin(), fold_m.target.end());
    }

    // Pooled metrics, computed exactly once; never a mean of fold costs.
    trial.under_fraction = underallocation_fraction(oof_preds, oof_actuals);
    trial.over_ratio = overallocation_ratio(oof_preds, oof_actuals);
    trial.cost = cost(trial.under_fraction, trial.over_ratio);
    trial.wall_time_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return trial;
}

namespace {

SearchResult search_loop(const SearchSpace& space, int n_trials, std::uint64_t seed,
                         const TrialObjective& objective, TunerOptions options) {
    if (n_trials < 1) throw ArgumentError("n_trials must be >= 1");
    space.validate();
    TunerState state(seed, options);
    std::uint64_t seed_state = seed;

    for (int t = 0; t < n_trials; ++t) {
        const ParamMap params = suggest(state, space);
        const std::uint64_t trial_seed = splitmix64(seed_state);
        Trial trial;
        try {
            trial = objective(params, trial_seed);
        } catch (const std::exception& e) {
            trial.failed = true;
            trial.error = e.what();
            trial.cost = kInf;
        }
        trial.trial_id = t;
        trial.params = params;
        state.history.push_back(std::move(trial));
    }

    SearchResult result;
    result.history = std::move(state.history);
    std::size_t best = 0;
    for (std::size_t i = 1; i < result.history.size(); ++i)
        if (result.history[i].cost < result.history[best].cost) best = i;
    result.best = result.history[best];
    return result;
}

} // namespace

SearchResult run_search(const SearchSpace& space, int n_trials, std::uint64_t seed,
                        const TrialObjective& objective, TunerOptions options) {
    return search_loop(space, n_trials, seed, objective, options);
}

SearchResult run_search(const FeatureMatrix& train, const SearchSpace& space, int n_trials,
                        std::uint64_t seed, TunerOptions options) {
    return search_loop(
        space, n_trials, seed,
        [&](const ParamMap& params, std::uint64_t trial_seed) {
            return evaluate_trial(params, train, trial_seed);
        },
        options);
}

SearchResult run_random_search(const SearchSpace& space, int n_trials, std::uint64_t seed,
                               const TrialObjective& objective) {
    TunerOptions options;
    options.n_startup_trials = std::numeric_limits<int>::max(); // prior samples forever
    return search_loop(space, n_trials, seed, objective, options);
}

std::string trials_log_csv(const SearchSpace& space, const std::vector<Trial>& history) {
    std::vector<std::string> header{"trial_id"};
    for (const auto& [name, _] : space.params) header.push_back(name);
    header.insert(header.end(), {"cost", "under_fraction", "over_ratio", "wall_time_seconds"});
    std::string out = csv_join(header) + "\n";

    char buf[40];
    auto fmt = [&](double v) {
        std::snprintf(buf, sizeof(buf), "%.10g", v);
        return std::string(buf);
    };
    for (const auto& trial : history) {
        std::vector<std::string> row{std::to_string(trial.trial_id)};
        for (const auto& [name, _] : space.params) {
            const auto it = trial.params.find(name);
            row.push_back(it == trial.params.end() ? "" : param_to_string(it->second));
        }
        row.push_back(trial.failed ? "inf" : fmt(trial.cost));
        row.push_back(fmt(trial.under_fraction));
        row.push_back(fmt(trial.over_ratio));
        row.push_back(fmt(trial.wall_time_seconds));
        out += csv_join(row) + "\n";
    }
    return out;
}

} // namespace memfit
