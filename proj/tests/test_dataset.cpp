#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <memfit/dataset.hpp>
#include <memfit/errors.hpp>

#include <filesystem>
#include <string>

using namespace memfit;

namespace {
const std::string kHeader = "time,build_profile,make_type,jobs,branch_id,memory_fail_count,max_rss,memreq\n";

std::string row(const std::string& time, const std::string& rss_bytes, const std::string& memreq_mb) {
    return time + ",linux-gcc9-opt,full,4,main,0," + rss_bytes + "," + memreq_mb + "\n";
}

Dataset load_content(const std::string& content) { return load_csv_content(content, {}); }
} // namespace

TEST_CASE("unit conversion: max_rss bytes and memreq SI MB both land in MiB") {
    Dataset ds = load_content(kHeader + row("100", "1048576", "683"));
    REQUIRE(ds.size() == 1);
    CHECK(ds[0].max_rss == 1.0);
    CHECK(ds[0].memreq == doctest::Approx(651.3595581054688).epsilon(1e-12));

    Dataset big = load_content(kHeader + row("100", "373572739", "1"));
    CHECK(big[0].max_rss == doctest::Approx(356.26672649383545).epsilon(1e-12));
}

TEST_CASE("records come out sorted by time, ties keeping file order") {
    std::string content = kHeader;
    content += "300,linux-gcc9-opt,full,4,A,0,2097152,10\n";
    content += "100,linux-gcc9-opt,full,4,B,0,2097152,10\n";
    content += "300,linux-gcc9-opt,full,4,C,0,2097152,10\n";
    content += "200,linux-gcc9-opt,full,4,D,0,2097152,10\n";
    Dataset ds = load_content(content);
    REQUIRE(ds.size() == 4);
    CHECK(ds[0].branch_id == "B");
    CHECK(ds[1].branch_id == "D");
    CHECK(ds[2].branch_id == "A"); // stable: file order among equal times
    CHECK(ds[3].branch_id == "C");
}

TEST_CASE("column mapping renames source headers") {
    std::string content = "ts,profile,make_type,jobs,branch_id,memory_fail_count,rss,req\n"
                          "100,linux-gcc9-opt,full,4,main,0,1048576,1\n";
    ColumnMapping mapping{{"time", "ts"}, {"build_profile", "profile"},
                          {"max_rss", "rss"}, {"memreq", "req"}};
    Dataset ds = load_csv_content(content, mapping);
    REQUIRE(ds.size() == 1);
    CHECK(ds[0].build_profile == "linux-gcc9-opt");
    CHECK(ds[0].max_rss == 1.0);
}

TEST_CASE("missing mandatory column raises SchemaError") {
    CHECK_THROWS_AS(load_content("time,build_profile\n1,x\n"), SchemaError);
    // A mapping pointing at a nonexistent source header is the same failure.
    CHECK_THROWS_AS(load_csv_content(kHeader + row("1", "1", "1"), {{"time", "nope"}}),
                    SchemaError);
}

TEST_CASE("ISO-8601 timestamps are accepted") {
    Dataset ds = load_content(kHeader + row("2024-01-01T00:00:00Z", "1048576", "1"));
    CHECK(ds[0].time == 1704067200);
}

TEST_CASE("bad rows are rejected and counted; bad fail_count only warns") {
    std::string content = kHeader;
    content += row("100", "1048576", "10");
    content += row("oops", "1048576", "10");        // unparseable time -> reject
    content += row("200", "notanumber", "10");      // unparseable rss -> reject
    content += "300,linux-gcc9-opt,full,4,main,xyz,1048576,10\n"; // bad fail count -> warn
    content += row("400", "1048576", "10");
    IngestSummary summary;
    Dataset ds = load_csv_content(content, {}, "<memory>", &summary);
    CHECK(ds.size() == 3);
    CHECK(summary.rows_loaded == 3);
    CHECK(summary.rows_rejected == 2);
    CHECK(summary.warnings == 1);
    CHECK(summary.time_min == 100);
    CHECK(summary.time_max == 400);
    // The warned row survives with fail count 0.
    CHECK(ds[1].memory_fail_count == 0);
}

TEST_CASE("majority-rejected input raises DataQualityError") {
    std::string content = kHeader;
    content += row("100", "1048576", "10");
    content += row("bad1", "1048576", "10");
    content += row("bad2", "1048576", "10");
    CHECK_THROWS_AS(load_content(content), DataQualityError);
}

TEST_CASE("extras preserve unmapped source columns in header order") {
    std::string content =
        "time,build_profile,make_type,jobs,branch_id,memory_fail_count,max_rss,memreq,color,shape\n"
        "100,linux-gcc9-opt,full,4,main,0,1048576,1,red,square\n";
    Dataset ds = load_content(content);
    REQUIRE(ds[0].extras.size() == 2);
    CHECK(ds[0].extras[0] == std::pair<std::string, std::string>("color", "red"));
    CHECK(ds[0].extras[1] == std::pair<std::string, std::string>("shape", "square"));
}

TEST_CASE("save_csv round-trips through load_csv") {
    std::string content = kHeader;
    content += row("100", "1048576", "683");
    content += row("200", "373572739", "42");
    Dataset ds = load_content(content);
    auto path = std::filesystem::temp_directory_path() / "memfit_dataset_roundtrip.csv";
    save_csv(ds, path.string());
    Dataset back = load_csv(path.string(), {});
    std::filesystem::remove(path);
    REQUIRE(back.size() == 2);
    for (std::size_t i = 0; i < 2; ++i) {
        CHECK(back[i].time == ds[i].time);
        CHECK(back[i].build_profile == ds[i].build_profile);
        // Source units are integral bytes / MB, so MiB values survive exactly.
        CHECK(back[i].max_rss == ds[i].max_rss);
        CHECK(back[i].memreq == ds[i].memreq);
    }
}

TEST_CASE("load_csv on a missing path raises IoError") {
    CHECK_THROWS_AS(load_csv("/nonexistent/memfit.csv", {}), IoError);
}

TEST_CASE("temporal_split takes the last ceil(fraction*n) rows") {
    std::string content = kHeader;
    for (int i = 1; i <= 10; ++i) content += row(std::to_string(i * 100), "1048576", "1");
    Dataset ds = load_content(content);

    auto [train, holdout] = temporal_split(ds, 0.2);
    CHECK(train.size() == 8);
    CHECK(holdout.size() == 2);
    CHECK(train[7].time < holdout[0].time);
    CHECK(holdout[1].time == 1000);

    auto [t2, h2] = temporal_split(ds, 0.25);
    CHECK(h2.size() == 3); // ceil(2.5)
    CHECK(t2.size() == 7);

    CHECK_THROWS_AS(temporal_split(ds, 0.0), ArgumentError);
    CHECK_THROWS_AS(temporal_split(ds, 1.0), ArgumentError);
    CHECK_THROWS_AS(temporal_split(ds, -0.5), ArgumentError);
}
