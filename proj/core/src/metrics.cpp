#include "memfit/metrics.hpp"

#include "memfit/csv.hpp"
#include "memfit/errors.hpp"
#include "memfit/util.hpp"

#include <nlohmann/json.hpp>

#include <cstdio>

namespace memfit {

namespace {

const char* const kBinLabels[5] = {"under", "[0%,25%)", "[25%,50%)", "[50%,100%)", ">=100%"};

std::size_t headroom_bin(double pred, double actual) {
    const double h = (pred - actual) / actual;
    if (h < 0.0) return 0;
    if (h < 0.25) return 1;
    if (h < 0.50) return 2;
    if (h < 1.00) return 3;
    return 4;
}

void check_pair(std::span<const double> preds, std::span<const double> actuals) {
    if (preds.size() != actuals.size())
        throw ArgumentError("prediction and actual vectors differ in length");
    if (preds.empty()) throw ArgumentError("metrics need at least one row");
}

std::vector<HistogramBin> finish_bins(const std::size_t counts[5], std::size_t n) {
    std::vector<HistogramBin> bins(5);
    for (std::size_t b = 0; b < 5; ++b) {
        bins[b].label = kBinLabels[b];
        bins[b].count = counts[b];
        bins[b].fraction = static_cast<double>(counts[b]) / static_cast<double>(n);
    }
    return bins;
}

} // namespace

double underallocation_fraction(std::span<const double> preds, std::span<const double> actuals) {
    check_pair(preds, actuals);
    std::size_t under = 0;
    for (std::size_t i = 0; i < preds.size(); ++i) under += preds[i] < actuals[i] ? 1 : 0;
    return static_cast<double>(under) / static_cast<double>(preds.size());
}

double overallocation_ratio(std::span<const double> preds, std::span<const double> actuals) {
    check_pair(preds, actuals);
    const double total_pred = compensated_sum(preds);
    const double total_actual = compensated_sum(actuals);
    if (!(total_actual > 0.0)) throw ArgumentError("total actual memory must be positive");
    return total_pred / total_actual;
}

double cost(double under_fraction, double over_ratio) {
    return 5.0 * under_fraction + over_ratio;
}

std::vector<HistogramBin> quality_histogram(std::span<const double> preds,
                                            std::span<const double> actuals) {
    check_pair(preds, actuals);
    std::size_t counts[5] = {0, 0, 0, 0, 0};
    for (std::size_t i = 0; i < preds.size(); ++i) counts[headroom_bin(preds[i], actuals[i])] += 1;
    return finish_bins(counts, preds.size());
}

EvalReport evaluate(std::span<const double> preds, std::span<const double> actuals,
                    double mean_inference_seconds) {
    EvalReport r;
    r.n_jobs = preds.size();
    r.under_fraction = underallocation_fraction(preds, actuals);
    r.over_ratio = overallocation_ratio(preds, actuals);
    r.over_percent = (r.over_ratio - 1.0) * 100.0;
    r.cost = cost(r.under_fraction, r.over_ratio);
    r.histogram = quality_histogram(preds, actuals);
    r.mean_inference_seconds = mean_inference_seconds;
    return r;
}

EvalReport baseline_report(const Dataset& holdout) {
    if (holdout.empty()) throw ArgumentError("baseline report needs at least one row");
    const std::size_t n = holdout.size();
    std::vector<double> memreq(n), max_rss(n);
    std::size_t under = 0;
    std::size_t counts[5] = {0, 0, 0, 0, 0};
    for (std::size_t i = 0; i < n; ++i) {
        const BuildRecord& rec = holdout[i];
        memreq[i] = rec.memreq;
        max_rss[i] = rec.max_rss;
        // Failure counts catch jobs the memory limit capped: observed rss can
        // sit below memreq even though the job was effectively under-allocated.
        if (rec.memory_fail_count > 0 || rec.max_rss > rec.memreq) under += 1;
        counts[headroom_bin(rec.memreq, rec.max_rss)] += 1;
    }
    EvalReport r;
    r.n_jobs = n;
    r.under_fraction = static_cast<double>(under) / static_cast<double>(n);
    r.over_ratio = overallocation_ratio(memreq, max_rss);
    r.over_percent = (r.over_ratio - 1.0) * 100.0;
    r.cost = cost(r.under_fraction, r.over_ratio);
    r.histogram = finish_bins(counts, n);
    return r;
}

std::string EvalReport::to_json() const {
    nlohmann::json j;
    j["n_jobs"] = n_jobs;
    j["under_fraction"] = under_fraction;
    j["under_percent"] = under_fraction * 100.0;
    j["over_ratio"] = over_ratio;
    j["over_percent"] = over_percent;
    j["cost"] = cost;
    j["mean_inference_seconds"] = mean_inference_seconds;
    nlohmann::json bins = nlohmann::json::array();
    for (const auto& b : histogram)
        bins.push_back({{"label", b.label}, {"count", b.count}, {"fraction", b.fraction}});
    j["histogram"] = std::move(bins);
    return j.dump(2);
}

std::string EvalReport::histogram_csv() const {
    std::string out = "bin_label,count,fraction\n";
    for (const auto& b : histogram) {
        out += csv_escape(b.label);
        out += ',';
        out += std::to_string(b.count);
        out += ',';
        char buf[32];
        std::snprintf(buf, sizeof(buf), "%.6f", b.fraction);
        out += buf;
        out += '\n';
    }
    return out;
}

} // namespace memfit
