#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

namespace memfit {

/// Memory unit conversions. The canonical in-memory unit is MiB; source data
/// mixes bytes (max_rss) and SI megabytes (memreq).
inline double bytes_to_mib(double bytes) { return bytes / 1048576.0; }
inline double mib_to_bytes(double mib) { return mib * 1048576.0; }
inline double mb_to_mib(double mb) { return mb * 1.0e6 / 1048576.0; }
inline double mib_to_mb(double mib) { return mib * 1048576.0 / 1.0e6; }

/// One build job's telemetry row. Memory fields are MiB.
struct BuildRecord {
    std::int64_t time = 0;          ///< epoch seconds, UTC
    std::string build_profile;      ///< architecture/compiler/optimization descriptor
    std::string make_type;
    std::int64_t jobs = 0;          ///< build parallelism
    std::string branch_id;
    std::int64_t memory_fail_count = 0;
    double max_rss = 0.0;           ///< peak memory, MiB (source unit: bytes)
    double memreq = 0.0;            ///< requested memory, MiB (source unit: SI MB)
    std::vector<std::pair<std::string, std::string>> extras; ///< remaining source columns, header order
};

/// Maps canonical column names to source header names. Canonical names that
/// are absent from the map default to themselves.
using ColumnMapping = std::map<std::string, std::string>;

/// The eight canonical columns every source file must provide.
const std::vector<std::string>& mandatory_columns();

struct IngestSummary {
    std::size_t rows_loaded = 0;
    std::size_t rows_rejected = 0;
    std::size_t warnings = 0;  ///< recoverable issues (e.g. unparseable memory_fail_count)
    std::int64_t time_min = 0;
    std::int64_t time_max = 0;

    std::string to_json() const;
};

/// Immutable after construction; records sorted ascending by time.
struct Dataset {
    std::vector<BuildRecord> records;
    std::string source_path;
    ColumnMapping column_mapping;

    std::size_t size() const { return records.size(); }
    bool empty() const { return records.empty(); }
    const BuildRecord& operator[](std::size_t i) const { return records[i]; }
    auto begin() const { return records.begin(); }
    auto end() const { return records.end(); }
};

/// Loads a CSV telemetry file. Rows whose mandatory columns fail to parse are
/// rejected and counted; an unparseable memory_fail_count alone defaults to 0
/// with a warning. Throws SchemaError (missing mandatory column), IoError
/// (unreadable file), or DataQualityError (more than half the rows rejected).
Dataset load_csv(const std::string& path, const ColumnMapping& mapping,
                 IngestSummary* summary = nullptr);

Dataset load_csv_content(const std::string& content, const ColumnMapping& mapping,
                         const std::string& source_path = "<memory>",
                         IngestSummary* summary = nullptr);

/// Writes a dataset back to CSV with canonical headers, converting max_rss to
/// bytes and memreq to SI MB (both rounded to integers, matching source units).
void save_csv(const Dataset& ds, const std::string& path);

/// Chronological split: the last ceil(fraction * n) records become the
/// holdout. Throws ArgumentError unless 0 < fraction < 1.
std::pair<Dataset, Dataset> temporal_split(const Dataset& ds, double holdout_fraction);

} // namespace memfit
