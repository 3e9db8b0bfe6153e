#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <memfit/timeutil.hpp>

using namespace memfit;

namespace {
void check_fields(std::int64_t epoch, int hour, int dow, int week, int month, int weekend) {
    TemporalFields f = derive_temporal(epoch);
    CAPTURE(epoch);
    CHECK(f.hour == hour);
    CHECK(f.day_of_week == dow);
    CHECK(f.week_of_year == week);
    CHECK(f.month == month);
    CHECK(f.is_weekend == weekend);
}
} // namespace

TEST_CASE("temporal decomposition against calendar reference") {
    check_fields(1704067200, 0, 0, 1, 1, 0);   // 2024-01-01 Monday
    check_fields(1704542400, 12, 5, 1, 1, 1);  // 2024-01-06 Saturday noon
    check_fields(1704585600, 0, 6, 1, 1, 1);   // 2024-01-07 Sunday
    check_fields(1735689599, 23, 1, 1, 12, 0); // 2024-12-31 Tuesday, ISO week 1 of 2025
    check_fields(1719792000, 0, 0, 27, 7, 0);  // 2024-07-01 Monday
    check_fields(946684800, 0, 5, 52, 1, 1);   // 2000-01-01 Saturday, ISO week 52 of 1999
    check_fields(978307200, 0, 0, 1, 1, 0);    // 2001-01-01 Monday
    check_fields(1703980800, 0, 6, 52, 12, 1); // 2023-12-31 Sunday
    check_fields(1136073600, 0, 6, 52, 1, 1);  // 2006-01-01 Sunday, ISO week 52 of 2005
}

TEST_CASE("weekly periodicity of day-of-week") {
    for (std::int64_t t : {0LL, 1704067200LL, 1719792000LL, 946684800LL}) {
        CHECK(derive_temporal(t).day_of_week == derive_temporal(t + 7 * 86400).day_of_week);
    }
}

TEST_CASE("parse_timestamp accepts epoch and ISO-8601 forms") {
    CHECK(parse_timestamp("1704067200") == 1704067200);
    CHECK(parse_timestamp("1704067200.75") == 1704067200); // fraction truncated
    CHECK(parse_timestamp("2024-01-01T00:00:00Z") == 1704067200);
    CHECK(parse_timestamp("2024-01-01 00:00:00") == 1704067200);
    CHECK(parse_timestamp("2024-01-01T00:00:00.500Z") == 1704067200);
    CHECK(parse_timestamp("2024-01-01") == 1704067200);
    CHECK(parse_timestamp("2024-07-01T13:45:10Z") == 1719841510);
    CHECK(parse_timestamp("  1704067200 ") == 1704067200);
    CHECK(parse_timestamp("-86400") == -86400);
}

TEST_CASE("parse_timestamp rejects malformed input") {
    CHECK(!parse_timestamp("").has_value());
    CHECK(!parse_timestamp("not a time").has_value());
    CHECK(!parse_timestamp("2024-13-01T00:00:00Z").has_value());
    CHECK(!parse_timestamp("2024-01-32").has_value());
    CHECK(!parse_timestamp("2024-01-01T25:00:00Z").has_value());
    CHECK(!parse_timestamp("12,5").has_value());
}

TEST_CASE("format_iso8601 round-trips through parse_timestamp") {
    for (std::int64_t t : {0LL, 1704067200LL, 1719841510LL, 946684800LL}) {
        std::string text = format_iso8601(t);
        CHECK(parse_timestamp(text) == t);
    }
    CHECK(format_iso8601(1704067200) == "2024-01-01T00:00:00Z");
    CHECK(format_iso8601(1719841510) == "2024-07-01T13:45:10Z");
}
