#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace memfit {

/// Calendar decomposition of a UTC timestamp.
struct TemporalFields {
    int hour = 0;        ///< 0..23
    int day_of_week = 0; ///< 0 = Monday .. 6 = Sunday
    int week_of_year = 0;///< ISO-8601 week number, 1..53
    int month = 0;       ///< 1..12
    int is_weekend = 0;  ///< 1 for Saturday/Sunday
};

TemporalFields derive_temporal(std::int64_t epoch_seconds);

/// Parses epoch seconds (integer or decimal) or ISO-8601
/// ("2024-01-01T00:00:00Z", space separator and date-only also accepted).
/// Fractional seconds are truncated. Returns nullopt on malformed input.
std::optional<std::int64_t> parse_timestamp(std::string_view text);

std::string format_iso8601(std::int64_t epoch_seconds);

} // namespace memfit
