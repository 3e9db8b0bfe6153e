#include "memfit/dataset.hpp"

#include "memfit/csv.hpp"
#include "memfit/errors.hpp"
#include "memfit/timeutil.hpp"
#include "memfit/util.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>

namespace memfit {

const std::vector<std::string>& mandatory_columns() {
    static const std::vector<std::string> cols = {
        "time", "build_profile", "make_type", "jobs",
        "branch_id", "memory_fail_count", "max_rss", "memreq"};
    return cols;
}

std::string IngestSummary::to_json() const {
    nlohmann::json j;
    j["rows_loaded"] = rows_loaded;
    j["rows_rejected"] = rows_rejected;
    j["warnings"] = warnings;
    if (rows_loaded > 0) {
        j["time_range"] = {{"min", format_iso8601(time_min)}, {"max", format_iso8601(time_max)}};
    } else {
        j["time_range"] = nullptr;
    }
    return j.dump(2);
}

namespace {

std::optional<double> parse_double(const std::string& s) {
    if (s.empty()) return std::nullopt;
    const char* begin = s.c_str();
    char* end = nullptr;
    double v = std::strtod(begin, &end);
    if (end != begin + s.size() || !std::isfinite(v)) return std::nullopt;
    return v;
}

std::optional<std::int64_t> parse_i64(const std::string& s) {
    std::int64_t v = 0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec == std::errc{} && res.ptr == s.data() + s.size()) return v;
    // tolerate integral-valued floats like "4.0"
    auto d = parse_double(s);
    if (d && *d == std::floor(*d)) return static_cast<std::int64_t>(*d);
    return std::nullopt;
}

} // namespace

Dataset load_csv(const std::string& path, const ColumnMapping& mapping, IngestSummary* summary) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open file: " + path);
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError("read failure: " + path);
    return load_csv_content(content, mapping, path, summary);
}

Dataset load_csv_content(const std::string& content, const ColumnMapping& mapping,
                         const std::string& source_path, IngestSummary* summary) {
    CsvTable table = parse_csv(content);

    auto source_name = [&](const std::string& canonical) {
        auto it = mapping.find(canonical);
        return it != mapping.end() ? it->second : canonical;
    };

    std::map<std::string, int> idx;
    for (const auto& canonical : mandatory_columns()) {
        int i = table.column_index(source_name(canonical));
        if (i < 0) throw SchemaError("missing mandatory column: " + canonical);
        idx[canonical] = i;
    }
    std::vector<bool> is_mandatory(table.header.size(), false);
    for (const auto& [canonical, i] : idx) is_mandatory[static_cast<std::size_t>(i)] = true;

    Dataset ds;
    ds.source_path = source_path;
    ds.column_mapping = mapping;
    IngestSummary local;

    for (const auto& row : table.rows) {
        if (row.size() != table.header.size()) {
            ++local.rows_rejected;
            continue;
        }
        auto field = [&](const std::string& canonical) -> const std::string& {
            return row[static_cast<std::size_t>(idx.at(canonical))];
        };

        BuildRecord rec;
        auto time = parse_timestamp(field("time"));
        auto jobs = parse_i64(field("jobs"));
        auto max_rss_bytes = parse_double(field("max_rss"));
        auto memreq_mb = parse_double(field("memreq"));
        if (!time || !jobs || *jobs < 0 || !max_rss_bytes || *max_rss_bytes <= 0.0 ||
            !memreq_mb || *memreq_mb <= 0.0) {
            ++local.rows_rejected;
            continue;
        }
        rec.time = *time;
        rec.jobs = *jobs;
        rec.max_rss = bytes_to_mib(*max_rss_bytes);
        rec.memreq = mb_to_mib(*memreq_mb);
        rec.build_profile = field("build_profile");
        rec.make_type = field("make_type");
        rec.branch_id = field("branch_id");

        auto fail = parse_i64(field("memory_fail_count"));
        if (!fail || *fail < 0) {
            // baseline-only column, not worth discarding a training row
            rec.memory_fail_count = 0;
            ++local.warnings;
        } else {
            rec.memory_fail_count = *fail;
        }

        for (std::size_t c = 0; c < table.header.size(); ++c) {
            if (!is_mandatory[c]) rec.extras.emplace_back(table.header[c], row[c]);
        }
        ds.records.push_back(std::move(rec));
    }

    std::size_t total = table.rows.size();
    if (total > 0 && local.rows_rejected * 2 > total) {
        throw DataQualityError("rejected " + std::to_string(local.rows_rejected) + " of " +
                               std::to_string(total) + " rows");
    }

    std::stable_sort(ds.records.begin(), ds.records.end(),
                     [](const BuildRecord& a, const BuildRecord& b) { return a.time < b.time; });

    local.rows_loaded = ds.records.size();
    if (!ds.records.empty()) {
        local.time_min = ds.records.front().time;
        local.time_max = ds.records.back().time;
    }
    if (summary) *summary = local;
    return ds;
}

void save_csv(const Dataset& ds, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open file for writing: " + path);

    std::vector<std::string> header = mandatory_columns();
    std::vector<std::string> extra_names;
    if (!ds.records.empty()) {
        for (const auto& [name, value] : ds.records.front().extras) extra_names.push_back(name);
    }
    header.insert(header.end(), extra_names.begin(), extra_names.end());
    out << csv_join(header) << "\n";

    char buf[64];
    for (const auto& rec : ds.records) {
        std::vector<std::string> row;
        row.push_back(std::to_string(rec.time));
        row.push_back(rec.build_profile);
        row.push_back(rec.make_type);
        row.push_back(std::to_string(rec.jobs));
        row.push_back(rec.branch_id);
        row.push_back(std::to_string(rec.memory_fail_count));
        std::snprintf(buf, sizeof(buf), "%lld", static_cast<long long>(std::llround(mib_to_bytes(rec.max_rss))));
        row.emplace_back(buf);
        std::snprintf(buf, sizeof(buf), "%lld", static_cast<long long>(std::llround(mib_to_mb(rec.memreq))));
        row.emplace_back(buf);
        for (const auto& [name, value] : rec.extras) row.push_back(value);
        out << csv_join(row) << "\n";
    }
    if (!out) throw IoError("write failure: " + path);
}

std::pair<Dataset, Dataset> temporal_split(const Dataset& ds, double holdout_fraction) {
    if (!(holdout_fraction > 0.0 && holdout_fraction < 1.0)) {
        throw ArgumentError("holdout_fraction must be in (0,1)");
    }
    std::size_t n = ds.records.size();
    auto k = static_cast<std::size_t>(guarded_ceil(holdout_fraction * static_cast<double>(n)));
    if (k > n) k = n;
    std::size_t split = n - k;

    Dataset train;
    Dataset holdout;
    train.source_path = ds.source_path;
    train.column_mapping = ds.column_mapping;
    holdout.source_path = ds.source_path;
    holdout.column_mapping = ds.column_mapping;
    train.records.assign(ds.records.begin(), ds.records.begin() + static_cast<std::ptrdiff_t>(split));
    holdout.records.assign(ds.records.begin() + static_cast<std::ptrdiff_t>(split), ds.records.end());
    return {std::move(train), std::move(holdout)};
}

} // namespace memfit
