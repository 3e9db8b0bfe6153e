#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <memfit/dataset.hpp>
#include <memfit/errors.hpp>
#include <memfit/metrics.hpp>
#include <memfit/util.hpp>

#include <nlohmann/json.hpp>

#include <vector>

using namespace memfit;

namespace {
const std::vector<double> kPreds{100, 120, 200, 90, 400, 130};
const std::vector<double> kActuals{110, 100, 150, 90, 180, 130};
} // namespace

TEST_CASE("underallocation is a strict comparison") {
    CHECK(underallocation_fraction(std::vector<double>{5, 10}, std::vector<double>{6, 9}) == 0.5);
    CHECK(underallocation_fraction(std::vector<double>{7, 7}, std::vector<double>{7, 7}) == 0.0);
    CHECK(underallocation_fraction(std::vector<double>{1e18, 1e18}, std::vector<double>{1, 2}) ==
          0.0);
    CHECK(underallocation_fraction(kPreds, kActuals) ==
          doctest::Approx(1.0 / 6.0).epsilon(1e-15));
    CHECK_THROWS_AS(underallocation_fraction(std::vector<double>{1}, std::vector<double>{1, 2}),
                    ArgumentError);
    CHECK_THROWS_AS(underallocation_fraction(std::vector<double>{}, std::vector<double>{}),
                    ArgumentError);
}

TEST_CASE("overallocation ratio is a ratio of totals") {
    CHECK(overallocation_ratio(std::vector<double>{15}, std::vector<double>{15}) == 1.0);
    CHECK(overallocation_ratio(std::vector<double>{2, 2}, std::vector<double>{1, 1}) == 2.0);
    CHECK(overallocation_ratio(kPreds, kActuals) ==
          doctest::Approx(1.368421052631579).epsilon(1e-15));
    CHECK_THROWS_AS(overallocation_ratio(std::vector<double>{1}, std::vector<double>{0}),
                    ArgumentError);
    CHECK_THROWS_AS(overallocation_ratio(std::vector<double>{1, 2}, std::vector<double>{3}),
                    ArgumentError);
}

TEST_CASE("cost arithmetic") {
    CHECK(cost(0.0, 1.0) == 1.0);
    // 5*0.0289 + 1.4451 and 5*0.0417 + 2.48, evaluated independently.
    CHECK(cost(0.0289, 1.4451) == doctest::Approx(1.5896).epsilon(1e-9));
    CHECK(cost(0.0417, 2.48) == doctest::Approx(2.6885).epsilon(1e-9));
    CHECK(cost(0.1, 1.5) == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("quality histogram: frozen example and boundary rules") {
    auto bins = quality_histogram(kPreds, kActuals);
    REQUIRE(bins.size() == 5);
    CHECK(bins[0].label == "under");
    CHECK(bins[1].label == "[0%,25%)");
    CHECK(bins[2].label == "[25%,50%)");
    CHECK(bins[3].label == "[50%,100%)");
    CHECK(bins[4].label == ">=100%");
    CHECK(bins[0].count == 1);
    CHECK(bins[1].count == 3); // includes two exact pred==actual rows
    CHECK(bins[2].count == 1);
    CHECK(bins[3].count == 0);
    CHECK(bins[4].count == 1);
    double frac = 0.0;
    std::size_t total = 0;
    for (const auto& b : bins) {
        total += b.count;
        frac += b.fraction;
    }
    CHECK(total == kPreds.size());
    CHECK(frac == doctest::Approx(1.0).epsilon(1e-12));

    // pred == actual sits in [0,25%); pred == 2*actual sits in >=100%.
    auto edge = quality_histogram(std::vector<double>{50, 100}, std::vector<double>{50, 50});
    CHECK(edge[1].count == 1);
    CHECK(edge[4].count == 1);
}

TEST_CASE("evaluate assembles consistent fields") {
    EvalReport r = evaluate(kPreds, kActuals, 2.5e-5);
    CHECK(r.n_jobs == 6);
    CHECK(r.under_fraction == doctest::Approx(1.0 / 6.0).epsilon(1e-15));
    CHECK(r.over_ratio == doctest::Approx(1.368421052631579).epsilon(1e-15));
    CHECK(r.over_percent == doctest::Approx((r.over_ratio - 1.0) * 100.0).epsilon(1e-15));
    CHECK(r.cost == cost(r.under_fraction, r.over_ratio));
    CHECK(r.cost == doctest::Approx(2.2017543859649122).epsilon(1e-12));
    CHECK(r.mean_inference_seconds == 2.5e-5);
    REQUIRE(r.histogram.size() == 5);

    auto j = nlohmann::json::parse(r.to_json());
    CHECK(j.at("n_jobs") == 6);
    CHECK(j.at("under_percent").get<double>() ==
          doctest::Approx(100.0 / 6.0).epsilon(1e-12));
    CHECK(j.at("histogram").size() == 5);

    std::string csv = r.histogram_csv();
    CHECK(csv.rfind("bin_label,count,fraction\n", 0) == 0);
    CHECK(csv.find("\"[0%,25%)\"") != std::string::npos); // comma inside a label forces quoting
}

TEST_CASE("doubling predictions exactly doubles the ratio and never hurts coverage") {
    Rng rng(31);
    std::vector<double> preds, actuals, doubled;
    for (int i = 0; i < 500; ++i) {
        preds.push_back(rng.uniform(10, 3000));
        actuals.push_back(rng.uniform(10, 3000));
        doubled.push_back(2.0 * preds.back());
    }
    CHECK(overallocation_ratio(doubled, actuals) == 2.0 * overallocation_ratio(preds, actuals));
    CHECK(underallocation_fraction(doubled, actuals) <= underallocation_fraction(preds, actuals));

    // Non-dyadic factors behave the same up to rounding.
    std::vector<double> scaled;
    for (double p : preds) scaled.push_back(1.3 * p);
    CHECK(overallocation_ratio(scaled, actuals) ==
          doctest::Approx(1.3 * overallocation_ratio(preds, actuals)).epsilon(1e-12));
}

TEST_CASE("baseline report follows the request-based rules") {
    Dataset ds;
    auto add = [&](double memreq, double max_rss, std::int64_t fails) {
        BuildRecord rec;
        rec.time = static_cast<std::int64_t>(ds.records.size());
        rec.build_profile = "p";
        rec.make_type = "full";
        rec.memreq = memreq;
        rec.max_rss = max_rss;
        rec.memory_fail_count = fails;
        ds.records.push_back(rec);
    };
    add(2048, 1024, 0); // fine: headroom exactly 100%
    add(1000, 1500, 0); // under by usage
    add(4096, 100, 3);  // under by fail count despite huge request
    add(500, 500, 0);   // boundary: not under (strict), headroom 0

    EvalReport r = baseline_report(ds);
    CHECK(r.n_jobs == 4);
    CHECK(r.under_fraction == 0.5);
    CHECK(r.over_ratio ==
          doctest::Approx((2048.0 + 1000 + 4096 + 500) / (1024.0 + 1500 + 100 + 500))
              .epsilon(1e-15));
    CHECK(r.cost == cost(r.under_fraction, r.over_ratio));
    // Histogram: the fail-count row still bins by headroom, which is huge.
    CHECK(r.histogram[4].count == 2); // 2048/1024 and 4096/100
    CHECK(r.histogram[0].count == 1);
    CHECK(r.histogram[1].count == 1);
}
