#include "memfit/features.hpp"

#include "memfit/errors.hpp"
#include "memfit/timeutil.hpp"
#include "memfit/util.hpp"

#include "json_io.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <queue>
#include <unordered_map>

namespace memfit {

namespace {

std::vector<std::string> base_feature_names(int lag_count, int window) {
    std::vector<std::string> names = {
        "ts_hour", "ts_dayofweek", "ts_weekofyear", "ts_month", "ts_is_weekend",
        "arch",    "compiler",     "opt_level",     "make_type",
        "jobs",    "branch_id_str", "memreq_mb",
    };
    for (int i = 1; i <= lag_count; ++i)
        names.push_back("lag_" + std::to_string(i) + "_grouped");
    const std::string w = std::to_string(window);
    names.push_back("rolling_mean_rss_g1_w" + w);
    names.push_back("rolling_max_rss_g1_w" + w);
    names.push_back("rolling_p95_rss_g1_w" + w);
    names.push_back("rolling_std_rss_g1_w" + w);
    names.push_back("group_seq_index");
    names.push_back("group_expanding_median");
    return names;
}

const std::vector<std::string> kCategoricalFeatures = {
    "arch", "compiler", "opt_level", "make_type", "branch_id_str",
};

bool is_categorical(const std::string& name) {
    return std::find(kCategoricalFeatures.begin(), kCategoricalFeatures.end(), name) !=
           kCategoricalFeatures.end();
}

std::string group_key_of(const BuildRecord& rec, const std::vector<std::string>& key_cols) {
    std::string key;
    for (const auto& col : key_cols) {
        if (!key.empty()) key.push_back('\x1f');
        if (col == "build_profile")
            key += rec.build_profile;
        else if (col == "make_type")
            key += rec.make_type;
        else if (col == "branch_id")
            key += rec.branch_id;
        else
            throw ArgumentError("unsupported group key column: " + col);
    }
    return key;
}

/// Streaming median over an append-only sequence. Two-heap construction;
/// value() reproduces median() exactly (same midpoint expression).
class StreamingMedian {
public:
    void add(double v) {
        if (lo_.empty() || v <= lo_.top())
            lo_.push(v);
        else
            hi_.push(v);
        if (lo_.size() > hi_.size() + 1) {
            hi_.push(lo_.top());
            lo_.pop();
        } else if (hi_.size() > lo_.size()) {
            lo_.push(hi_.top());
            hi_.pop();
        }
    }

    double value() const {
        if (lo_.size() > hi_.size()) return lo_.top();
        const double lower = lo_.top();
        const double upper = hi_.top();
        return lower + (upper - lower) / 2.0;
    }

private:
    std::priority_queue<double> lo_; // max-heap, lower half
    std::priority_queue<double, std::vector<double>, std::greater<>> hi_;
};

struct GroupState {
    std::deque<double> tail; ///< most recent targets, oldest at front
    std::size_t count = 0;
    StreamingMedian median;
};

} // namespace

ProfileParts parse_build_profile(const std::string& profile, const std::string& delimiter) {
    std::vector<std::string> parts;
    if (delimiter.empty()) {
        parts.push_back(profile);
    } else {
        std::size_t pos = 0;
        while (true) {
            const std::size_t next = profile.find(delimiter, pos);
            if (next == std::string::npos) {
                parts.push_back(profile.substr(pos));
                break;
            }
            parts.push_back(profile.substr(pos, next - pos));
            pos = next + delimiter.size();
        }
    }
    auto part = [&](std::size_t i) -> std::string {
        if (i >= parts.size() || parts[i].empty()) return "unknown";
        return parts[i];
    };
    ProfileParts out;
    out.arch = part(0);
    out.compiler = part(1);
    if (parts.size() <= 3) {
        out.opt_level = part(2);
    } else {
        // Extra components belong to the optimisation tag (e.g. "opt-lto").
        std::string rest = parts[2];
        for (std::size_t i = 3; i < parts.size(); ++i) rest += delimiter + parts[i];
        out.opt_level = rest.empty() ? "unknown" : rest;
    }
    return out;
}

std::vector<HistoryRow> compute_grouped_history(const Dataset& ds,
                                                const std::vector<std::string>& group_key,
                                                int lag_count, int window, double impute_value) {
    if (lag_count < 0 || window < 1) throw ArgumentError("invalid lag_count or window");
    const std::size_t n = ds.size();
    std::vector<HistoryRow> out(n);
    std::unordered_map<std::string, GroupState> groups;
    const std::size_t keep = static_cast<std::size_t>(std::max(lag_count, window));

    // Rows are admitted into group state only once a strictly later timestamp
    // is reached, so equal-time rows never see each other.
    std::size_t flushed = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const BuildRecord& rec = ds[i];
        while (flushed < i && ds[flushed].time < rec.time) {
            GroupState& g = groups[group_key_of(ds[flushed], group_key)];
            g.tail.push_back(ds[flushed].max_rss);
            if (g.tail.size() > keep) g.tail.pop_front();
            g.count += 1;
            g.median.add(ds[flushed].max_rss);
            ++flushed;
        }

        const GroupState& g = groups[group_key_of(rec, group_key)];
        HistoryRow& h = out[i];
        h.lags.resize(static_cast<std::size_t>(lag_count));
        for (int j = 1; j <= lag_count; ++j) {
            const auto uj = static_cast<std::size_t>(j);
            h.lags[uj - 1] = g.tail.size() >= uj ? g.tail[g.tail.size() - uj] : impute_value;
        }

        const std::size_t w = std::min<std::size_t>(static_cast<std::size_t>(window), g.tail.size());
        if (w == 0) {
            h.rolling_mean = h.rolling_max = h.rolling_p95 = h.rolling_std = impute_value;
        } else {
            std::vector<double> vals(g.tail.end() - static_cast<std::ptrdiff_t>(w), g.tail.end());
            h.rolling_mean = mean(vals);
            h.rolling_max = *std::max_element(vals.begin(), vals.end());
            h.rolling_p95 = nearest_rank_quantile(vals, 0.95);
            h.rolling_std = population_stddev(vals);
        }

        h.seq_index = static_cast<double>(g.count);
        h.expanding_median = g.count > 0 ? g.median.value() : impute_value;
    }
    return out;
}

EncoderState fit_encoders(const Dataset& train, const FeatureOptions& opts) {
    if (train.empty()) throw ArgumentError("cannot fit encoders on an empty dataset");
    const double n = static_cast<double>(train.size());

    std::map<std::string, std::map<std::string, std::size_t>> counts;
    std::vector<double> targets;
    targets.reserve(train.size());
    for (const auto& rec : train) {
        const ProfileParts parts = parse_build_profile(rec.build_profile, opts.profile_delimiter);
        counts["arch"][parts.arch] += 1;
        counts["compiler"][parts.compiler] += 1;
        counts["opt_level"][parts.opt_level] += 1;
        counts["make_type"][rec.make_type] += 1;
        counts["branch_id_str"][rec.branch_id] += 1;
        targets.push_back(rec.max_rss);
    }

    EncoderState state;
    for (const auto& feature : kCategoricalFeatures) {
        const auto& table = counts[feature];
        const bool one_hot =
            feature != "branch_id_str" && table.size() <= opts.one_hot_max_cardinality;
        if (one_hot) {
            auto& vocab = state.one_hot_vocabularies[feature];
            for (const auto& [value, _] : table) vocab.push_back(value); // map order: sorted
        } else {
            auto& freq = state.frequency_tables[feature];
            for (const auto& [value, count] : table)
                freq[value] = static_cast<double>(count) / n;
        }
    }
    state.global_target_median = median(std::move(targets));
    return state;
}

FeatureSchema make_schema(const EncoderState& state, const FeatureOptions& opts) {
    FeatureSchema schema;
    schema.names = base_feature_names(opts.lag_count, opts.rolling_window);
    schema.group_key = {"build_profile", "make_type"};
    schema.profile_delimiter = opts.profile_delimiter;
    schema.lag_count = opts.lag_count;
    schema.rolling_window = opts.rolling_window;
    for (const auto& name : schema.names) {
        if (!is_categorical(name)) {
            schema.categorical_encodings[name] = "numeric";
        } else if (state.one_hot_vocabularies.count(name)) {
            schema.categorical_encodings[name] = "one_hot";
        } else {
            schema.categorical_encodings[name] = "frequency";
        }
    }
    return schema;
}

std::vector<std::string> expanded_columns(const FeatureSchema& schema, const EncoderState& state) {
    std::vector<std::string> cols;
    for (const auto& name : schema.names) {
        const auto it = schema.categorical_encodings.find(name);
        const std::string& enc = it == schema.categorical_encodings.end() ? "numeric" : it->second;
        if (enc == "one_hot") {
            const auto vit = state.one_hot_vocabularies.find(name);
            if (vit == state.one_hot_vocabularies.end())
                throw ConsistencyError("one-hot feature without vocabulary: " + name);
            for (const auto& value : vit->second) cols.push_back(name + "=" + value);
        } else {
            cols.push_back(name);
        }
    }
    return cols;
}

void encode_row(const RawFeatures& raw, const EncoderState& state, const FeatureSchema& schema,
                std::span<double> out) {
    std::size_t k = 0;
    auto put = [&](double v) { out[k++] = v; };

    auto put_categorical = [&](const std::string& name, const std::string& value) {
        const std::string& enc = schema.categorical_encodings.at(name);
        if (enc == "one_hot") {
            for (const auto& v : state.one_hot_vocabularies.at(name)) put(v == value ? 1.0 : 0.0);
        } else {
            const auto& table = state.frequency_tables.at(name);
            const auto it = table.find(value);
            put(it == table.end() ? 0.0 : it->second);
        }
    };

    for (const auto& name : schema.names) {
        if (name == "ts_hour")
            put(raw.ts_hour);
        else if (name == "ts_dayofweek")
            put(raw.ts_dayofweek);
        else if (name == "ts_weekofyear")
            put(raw.ts_weekofyear);
        else if (name == "ts_month")
            put(raw.ts_month);
        else if (name == "ts_is_weekend")
            put(raw.ts_is_weekend);
        else if (name == "arch")
            put_categorical(name, raw.arch);
        else if (name == "compiler")
            put_categorical(name, raw.compiler);
        else if (name == "opt_level")
            put_categorical(name, raw.opt_level);
        else if (name == "make_type")
            put_categorical(name, raw.make_type);
        else if (name == "jobs")
            put(raw.jobs);
        else if (name == "branch_id_str")
            put_categorical(name, raw.branch_id);
        else if (name == "memreq_mb")
            put(raw.memreq_mib);
        else if (name.rfind("lag_", 0) == 0) {
            const std::size_t idx = static_cast<std::size_t>(std::stoul(name.substr(4))) - 1;
            put(idx < raw.history.lags.size() ? raw.history.lags[idx] : 0.0);
        } else if (name.rfind("rolling_mean_", 0) == 0)
            put(raw.history.rolling_mean);
        else if (name.rfind("rolling_max_", 0) == 0)
            put(raw.history.rolling_max);
        else if (name.rfind("rolling_p95_", 0) == 0)
            put(raw.history.rolling_p95);
        else if (name.rfind("rolling_std_", 0) == 0)
            put(raw.history.rolling_std);
        else if (name == "group_seq_index")
            put(raw.history.seq_index);
        else if (name == "group_expanding_median")
            put(raw.history.expanding_median);
        else
            throw ConsistencyError("unknown feature in schema: " + name);
    }
    if (k != out.size()) throw ConsistencyError("feature row width mismatch");
}

FeatureMatrix transform(const Dataset& ds, const EncoderState& state, const FeatureSchema& schema) {
    for (const auto& name : schema.names) {
        const auto it = schema.categorical_encodings.find(name);
        if (it == schema.categorical_encodings.end())
            throw ConsistencyError("schema lacks encoding for feature: " + name);
        if (it->second == "one_hot" && !state.one_hot_vocabularies.count(name))
            throw ConsistencyError("one-hot feature without vocabulary: " + name);
        if (it->second == "frequency" && !state.frequency_tables.count(name))
            throw ConsistencyError("frequency feature without table: " + name);
    }
    for (std::size_t i = 1; i < ds.size(); ++i)
        if (ds[i].time < ds[i - 1].time)
            throw ConsistencyError("dataset must be time-sorted before feature derivation");

    const auto history = compute_grouped_history(ds, schema.group_key, schema.lag_count,
                                                 schema.rolling_window, state.global_target_median);

    FeatureMatrix m;
    m.columns = expanded_columns(schema, state);
    m.n_rows = ds.size();
    m.n_cols = m.columns.size();
    m.schema_hash = schema.hash();
    m.values.resize(m.n_rows * m.n_cols);
    m.target.resize(m.n_rows);
    m.row_ids.resize(m.n_rows);

    for (std::size_t i = 0; i < ds.size(); ++i) {
        const BuildRecord& rec = ds[i];
        const TemporalFields t = derive_temporal(rec.time);
        const ProfileParts parts = parse_build_profile(rec.build_profile, schema.profile_delimiter);

        RawFeatures raw;
        raw.ts_hour = static_cast<double>(t.hour);
        raw.ts_dayofweek = static_cast<double>(t.day_of_week);
        raw.ts_weekofyear = static_cast<double>(t.week_of_year);
        raw.ts_month = static_cast<double>(t.month);
        raw.ts_is_weekend = t.is_weekend ? 1.0 : 0.0;
        raw.arch = parts.arch;
        raw.compiler = parts.compiler;
        raw.opt_level = parts.opt_level;
        raw.make_type = rec.make_type;
        raw.jobs = static_cast<double>(rec.jobs);
        raw.branch_id = rec.branch_id;
        raw.memreq_mib = rec.memreq;
        raw.history = history[i];

        encode_row(raw, state, schema, {m.values.data() + i * m.n_cols, m.n_cols});
        m.target[i] = rec.max_rss;
        m.row_ids[i] = i;
    }
    return m;
}

FeatureMatrix FeatureMatrix::slice(std::size_t lo, std::size_t hi) const {
    if (lo > hi || hi > n_rows) throw ArgumentError("invalid slice range");
    FeatureMatrix out;
    out.n_rows = hi - lo;
    out.n_cols = n_cols;
    out.columns = columns;
    out.schema_hash = schema_hash;
    out.values.assign(values.begin() + static_cast<std::ptrdiff_t>(lo * n_cols),
                      values.begin() + static_cast<std::ptrdiff_t>(hi * n_cols));
    out.target.assign(target.begin() + static_cast<std::ptrdiff_t>(lo),
                      target.begin() + static_cast<std::ptrdiff_t>(hi));
    out.row_ids.assign(row_ids.begin() + static_cast<std::ptrdiff_t>(lo),
                       row_ids.begin() + static_cast<std::ptrdiff_t>(hi));
    return out;
}

FeatureMatrix FeatureMatrix::select(const std::vector<std::size_t>& rows) const {
    FeatureMatrix out;
    out.n_rows = rows.size();
    out.n_cols = n_cols;
    out.columns = columns;
    out.schema_hash = schema_hash;
    out.values.reserve(rows.size() * n_cols);
    out.target.reserve(rows.size());
    out.row_ids.reserve(rows.size());
    for (const std::size_t r : rows) {
        if (r >= n_rows) throw ArgumentError("row index out of range");
        out.values.insert(out.values.end(), values.begin() + static_cast<std::ptrdiff_t>(r * n_cols),
                          values.begin() + static_cast<std::ptrdiff_t>((r + 1) * n_cols));
        out.target.push_back(target[r]);
        out.row_ids.push_back(row_ids[r]);
    }
    return out;
}

std::string FeatureMatrix::digest() const {
    std::uint64_t h = fnv1a64(&n_rows, sizeof(n_rows));
    h = fnv1a64(&n_cols, sizeof(n_cols), h);
    for (const auto& c : columns) h = fnv1a64(c.data(), c.size(), h);
    h = fnv1a64(values.data(), values.size() * sizeof(double), h);
    h = fnv1a64(target.data(), target.size() * sizeof(double), h);
    return to_hex(h);
}

std::string FeatureSchema::canonical_json() const {
    return detail::schema_to_json(*this).dump();
}

std::uint64_t FeatureSchema::hash() const { return fnv1a64(canonical_json()); }

FeatureSchema schema_from_json(const std::string& json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw CorruptionError(std::string("malformed schema JSON: ") + e.what());
    }
    return detail::schema_from_json_obj(j);
}

std::string EncoderState::to_json() const { return detail::encoder_to_json(*this).dump(); }

EncoderState encoder_from_json(const std::string& json_text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw CorruptionError(std::string("malformed encoder JSON: ") + e.what());
    }
    return detail::encoder_from_json_obj(j);
}

namespace detail {

nlohmann::json schema_to_json(const FeatureSchema& schema) {
    // nlohmann::json objects keep keys sorted, which makes dump() canonical.
    nlohmann::json j;
    j["names"] = schema.names;
    j["categorical_encodings"] = schema.categorical_encodings;
    j["group_key"] = schema.group_key;
    j["profile_delimiter"] = schema.profile_delimiter;
    j["lag_count"] = schema.lag_count;
    j["rolling_window"] = schema.rolling_window;
    return j;
}

FeatureSchema schema_from_json_obj(const nlohmann::json& j) {
    try {
        FeatureSchema s;
        s.names = j.at("names").get<std::vector<std::string>>();
        s.categorical_encodings =
            j.at("categorical_encodings").get<std::map<std::string, std::string>>();
        s.group_key = j.at("group_key").get<std::vector<std::string>>();
        s.profile_delimiter = j.at("profile_delimiter").get<std::string>();
        s.lag_count = j.at("lag_count").get<int>();
        s.rolling_window = j.at("rolling_window").get<int>();
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw CorruptionError(std::string("invalid schema JSON: ") + e.what());
    }
}

nlohmann::json encoder_to_json(const EncoderState& state) {
    nlohmann::json j;
    j["frequency_tables"] = state.frequency_tables;
    j["one_hot_vocabularies"] = state.one_hot_vocabularies;
    j["global_target_median"] = state.global_target_median;
    return j;
}

EncoderState encoder_from_json_obj(const nlohmann::json& j) {
    try {
        EncoderState s;
        s.frequency_tables =
            j.at("frequency_tables").get<std::map<std::string, std::map<std::string, double>>>();
        s.one_hot_vocabularies =
            j.at("one_hot_vocabularies").get<std::map<std::string, std::vector<std::string>>>();
        s.global_target_median = j.at("global_target_median").get<double>();
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw CorruptionError(std::string("invalid encoder JSON: ") + e.what());
    }
}

} // namespace detail

} // namespace memfit
