#include "memfit/timeutil.hpp"

#include <cctype>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>

namespace memfit {

namespace {

using days = std::chrono::days;
using sys_days = std::chrono::sys_days;

sys_days day_of(std::int64_t epoch_seconds) {
    // floor division so pre-1970 timestamps land on the right day
    std::int64_t d = epoch_seconds / 86400;
    if (epoch_seconds % 86400 < 0) --d;
    return sys_days{days{d}};
}

int iso_week_number(sys_days day) {
    std::chrono::weekday wd{day};
    // Thursday of the current ISO week decides the ISO year.
    sys_days thursday = day + days{4 - static_cast<int>(wd.iso_encoding())};
    std::chrono::year_month_day ymd{thursday};
    sys_days jan1 = sys_days{ymd.year() / std::chrono::January / 1};
    auto doy = (thursday - jan1).count(); // 0-based day of ISO year
    return static_cast<int>(doy / 7) + 1;
}

} // namespace

TemporalFields derive_temporal(std::int64_t epoch_seconds) {
    sys_days day = day_of(epoch_seconds);
    std::int64_t secs_into_day = epoch_seconds - day.time_since_epoch().count() * 86400;
    std::chrono::weekday wd{day};
    std::chrono::year_month_day ymd{day};

    TemporalFields out;
    out.hour = static_cast<int>(secs_into_day / 3600);
    out.day_of_week = static_cast<int>(wd.iso_encoding()) - 1;
    out.week_of_year = iso_week_number(day);
    out.month = static_cast<int>(static_cast<unsigned>(ymd.month()));
    out.is_weekend = out.day_of_week >= 5 ? 1 : 0;
    return out;
}

namespace {

bool parse_int(std::string_view s, int& out) {
    auto res = std::from_chars(s.data(), s.data() + s.size(), out);
    return res.ec == std::errc{} && res.ptr == s.data() + s.size();
}

std::optional<std::int64_t> parse_iso(std::string_view s) {
    // YYYY-MM-DD[{T| }HH:MM:SS[.frac]][Z]
    if (s.size() < 10 || s[4] != '-' || s[7] != '-') return std::nullopt;
    int year, month, day;
    if (!parse_int(s.substr(0, 4), year) || !parse_int(s.substr(5, 2), month) ||
        !parse_int(s.substr(8, 2), day)) {
        return std::nullopt;
    }
    int hour = 0, minute = 0, second = 0;
    std::string_view rest = s.substr(10);
    if (!rest.empty()) {
        if (rest.front() != 'T' && rest.front() != ' ') return std::nullopt;
        rest.remove_prefix(1);
        if (rest.size() < 8 || rest[2] != ':' || rest[5] != ':') return std::nullopt;
        if (!parse_int(rest.substr(0, 2), hour) || !parse_int(rest.substr(3, 2), minute) ||
            !parse_int(rest.substr(6, 2), second)) {
            return std::nullopt;
        }
        rest.remove_prefix(8);
        if (!rest.empty() && rest.front() == '.') {
            rest.remove_prefix(1);
            while (!rest.empty() && std::isdigit(static_cast<unsigned char>(rest.front()))) {
                rest.remove_prefix(1);
            }
        }
        if (!rest.empty() && (rest.front() == 'Z' || rest.front() == 'z')) rest.remove_prefix(1);
        if (!rest.empty()) return std::nullopt;
    }
    using namespace std::chrono;
    year_month_day ymd{std::chrono::year{year} / month / day};
    if (!ymd.ok()) return std::nullopt;
    if (hour > 23 || minute > 59 || second > 60) return std::nullopt;
    std::int64_t d = sys_days{ymd}.time_since_epoch().count();
    return d * 86400 + hour * 3600 + minute * 60 + second;
}

} // namespace

std::optional<std::int64_t> parse_timestamp(std::string_view text) {
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front()))) text.remove_prefix(1);
    while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back()))) text.remove_suffix(1);
    if (text.empty()) return std::nullopt;

    // Numeric epoch, possibly with a fractional part.
    std::int64_t whole = 0;
    auto res = std::from_chars(text.data(), text.data() + text.size(), whole);
    if (res.ec == std::errc{}) {
        std::string_view rest(res.ptr, static_cast<std::size_t>(text.data() + text.size() - res.ptr));
        if (rest.empty()) return whole;
        if (rest.front() == '.') {
            rest.remove_prefix(1);
            if (rest.empty()) return std::nullopt;
            for (char c : rest) {
                if (!std::isdigit(static_cast<unsigned char>(c))) return std::nullopt;
            }
            return whole;
        }
    }
    return parse_iso(text);
}

std::string format_iso8601(std::int64_t epoch_seconds) {
    sys_days day = day_of(epoch_seconds);
    std::int64_t secs = epoch_seconds - day.time_since_epoch().count() * 86400;
    std::chrono::year_month_day ymd{day};
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02uT%02d:%02d:%02dZ",
                  static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                  static_cast<unsigned>(ymd.day()), static_cast<int>(secs / 3600),
                  static_cast<int>((secs / 60) % 60), static_cast<int>(secs % 60));
    return buf;
}

} // namespace memfit
