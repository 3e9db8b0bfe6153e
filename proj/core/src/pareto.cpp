#include "memfit/pareto.hpp"

#include "memfit/csv.hpp"
#include "memfit/errors.hpp"
#include "memfit/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>

namespace memfit {

namespace {

constexpr double kGridTol = 1e-9;

void check_grid(std::span<const double> grid, double lo, double hi, const char* what) {
    if (grid.empty()) throw ArgumentError(std::string(what) + " grid is empty");
    for (const double v : grid)
        if (v < lo - kGridTol || v > hi + kGridTol)
            throw ArgumentError(std::string(what) + " grid value out of bounds");
}

} // namespace

std::vector<double> make_grid(double lo, double hi, double step) {
    if (!(step > 0.0) || !(hi >= lo)) throw ArgumentError("invalid grid bounds or step");
    std::vector<double> grid;
    const auto count = static_cast<std::size_t>(std::floor((hi - lo) / step + kGridTol)) + 1;
    for (std::size_t k = 0; k < count; ++k)
        grid.push_back(std::min(lo + static_cast<double>(k) * step, hi));
    return grid;
}

SweepResult sweep(const FeatureMatrix& train, const FeatureMatrix& holdout,
                  const TrainConfig& cfg_a, const TrainConfig& cfg_b,
                  std::span<const double> alpha_grid, std::span<const double> s_grid) {
    check_grid(alpha_grid, 0.90, 0.99, "alpha");
    check_grid(s_grid, 1.00, 1.15, "safety factor");

    SweepResult result;
    for (std::size_t ai = 0; ai < alpha_grid.size(); ++ai) {
        TrainConfig a = cfg_a;
        TrainConfig b = cfg_b;
        a.alpha = alpha_grid[ai];
        b.alpha = alpha_grid[ai];
        EnsembleModel model = train_ensemble(train, a, b, 1.0);

        // s is a final multiplier, so each alpha trains once and every s is
        // a rescaling of the same base predictions.
        const std::vector<double> pa = predict_batch(model.member_a, holdout);
        const std::vector<double> pb = predict_batch(model.member_b, holdout);
        std::vector<double> base(holdout.n_rows);
        for (std::size_t i = 0; i < base.size(); ++i) base[i] = std::max(pa[i], pb[i]);

        std::vector<double> preds(holdout.n_rows);
        for (const double s : s_grid) {
            for (std::size_t i = 0; i < preds.size(); ++i)
                preds[i] = std::max(base[i] * s, model.prediction_floor);
            OperatingPoint p;
            p.alpha = alpha_grid[ai];
            p.safety_factor = s;
            p.under_fraction = underallocation_fraction(preds, holdout.target);
            p.over_percent = (overallocation_ratio(preds, holdout.target) - 1.0) * 100.0;
            p.cost = cost(p.under_fraction, p.over_percent / 100.0 + 1.0);
            p.model_index = ai;
            result.points.push_back(p);
        }
        result.models.push_back(std::move(model));
    }
    return result;
}

std::vector<std::size_t> non_dominated(const std::vector<OperatingPoint>& points) {
    if (points.empty()) throw ArgumentError("no points to compute a frontier over");
    std::vector<std::size_t> order(points.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (points[a].under_fraction != points[b].under_fraction)
            return points[a].under_fraction < points[b].under_fraction;
        if (points[a].over_percent != points[b].over_percent)
            return points[a].over_percent < points[b].over_percent;
        return a < b;
    });

    std::vector<std::size_t> frontier;
    double best_over = std::numeric_limits<double>::infinity();
    for (const std::size_t i : order) {
        if (points[i].over_percent < best_over) {
            frontier.push_back(i);
            best_over = points[i].over_percent;
        }
    }
    return frontier; // sorted by under_fraction ascending by construction
}

NamedPoints select_named(const std::vector<OperatingPoint>& points,
                         const std::vector<std::size_t>& frontier) {
    if (points.empty() || frontier.empty())
        throw ArgumentError("named points need a non-empty evaluation");

    auto better = [&](std::size_t i, std::size_t best, double vi, double vbest) {
        if (vi != vbest) return vi < vbest;
        if (points[i].cost != points[best].cost) return points[i].cost < points[best].cost;
        return i < best;
    };

    NamedPoints named;
    named.balanced = 0;
    for (std::size_t i = 1; i < points.size(); ++i)
        if (better(i, named.balanced, points[i].cost, points[named.balanced].cost))
            named.balanced = i;

    named.low_waste = frontier[0];
    named.low_under = frontier[0];
    for (const std::size_t i : frontier) {
        if (better(i, named.low_waste, points[i].over_percent, points[named.low_waste].over_percent))
            named.low_waste = i;
        if (better(i, named.low_under, points[i].under_fraction,
                   points[named.low_under].under_fraction))
            named.low_under = i;
    }
    return named;
}

std::string frontier_csv(const std::vector<OperatingPoint>& points,
                         const std::vector<std::size_t>& frontier, const NamedPoints& named) {
    std::vector<bool> on_frontier(points.size(), false);
    for (const std::size_t i : frontier) on_frontier[i] = true;

    std::string out = "alpha,s,under_fraction,over_percent,cost,is_frontier,named_role\n";
    char buf[40];
    auto fmt = [&](double v) {
        std::snprintf(buf, sizeof(buf), "%.10g", v);
        return std::string(buf);
    };
    for (std::size_t i = 0; i < points.size(); ++i) {
        const OperatingPoint& p = points[i];
        std::string role;
        auto add_role = [&](const char* r) {
            if (!role.empty()) role += '|';
            role += r;
        };
        if (i == named.balanced) add_role("balanced");
        if (i == named.low_waste) add_role("low_waste");
        if (i == named.low_under) add_role("low_under");

        out += csv_join({fmt(p.alpha), fmt(p.safety_factor), fmt(p.under_fraction),
                         fmt(p.over_percent), fmt(p.cost), on_frontier[i] ? "1" : "0", role});
        out += '\n';
    }
    return out;
}

} // namespace memfit
