#include "memfit/service.hpp"

#include "memfit/dataset.hpp"
#include "memfit/errors.hpp"
#include "memfit/timeutil.hpp"
#include "memfit/util.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>

namespace memfit {

namespace {

using nlohmann::json;

std::string error_body(const std::string& message) { return json{{"error", message}}.dump(); }

/// Thrown by request decoding; carries the HTTP status class.
struct RequestError : std::runtime_error {
    int status;
    RequestError(int status, const std::string& message)
        : std::runtime_error(message), status(status) {}
};

double require_number(const json& obj, const char* field) {
    if (!obj.contains(field)) throw RequestError(400, std::string("missing field: ") + field);
    const json& v = obj.at(field);
    if (!v.is_number()) throw RequestError(400, std::string("field must be a number: ") + field);
    return v.get<double>();
}

std::string require_string(const json& obj, const char* field) {
    if (!obj.contains(field)) throw RequestError(400, std::string("missing field: ") + field);
    const json& v = obj.at(field);
    if (!v.is_string()) throw RequestError(400, std::string("field must be a string: ") + field);
    return v.get<std::string>();
}

} // namespace

struct PredictionService::Impl {
    httplib::Server server;
};

PredictionService::PredictionService(EnsembleModel model)
    : model_(std::move(model)),
      model_id_(model_.model_id()),
      columns_(expanded_columns(model_.feature_schema, model_.encoder)),
      started_(std::chrono::steady_clock::now()),
      impl_(new Impl) {
    for (std::size_t i = 0; i < columns_.size(); ++i) column_index_[columns_[i]] = i;
}

PredictionService::~PredictionService() = default;

ServiceReply PredictionService::handle_health() const {
    const double uptime =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started_).count();
    json j;
    j["status"] = "ok";
    j["model_id"] = model_id_;
    j["uptime_seconds"] = uptime;
    return {200, j.dump()};
}

ServiceReply PredictionService::handle_predict(const std::string& request_body) {
    try {
        json req;
        try {
            req = json::parse(request_body);
        } catch (const json::exception& e) {
            throw RequestError(400, std::string("malformed JSON: ") + e.what());
        }
        if (!req.is_object() || (req.contains("features") == req.contains("job")))
            throw RequestError(400, "request must contain exactly one of 'features' or 'job'");

        std::vector<double> row(columns_.size(), 0.0);
        if (req.contains("features")) {
            const json& feats = req.at("features");
            if (!feats.is_object()) throw RequestError(400, "'features' must be an object");
            std::vector<bool> seen(columns_.size(), false);
            for (const auto& [key, value] : feats.items()) {
                const auto it = column_index_.find(key);
                if (it == column_index_.end())
                    throw RequestError(422, "unknown feature: " + key);
                if (!value.is_number())
                    throw RequestError(400, "feature must be a number: " + key);
                row[it->second] = value.get<double>();
                seen[it->second] = true;
            }
            for (std::size_t i = 0; i < seen.size(); ++i)
                if (!seen[i]) throw RequestError(422, "missing feature: " + columns_[i]);
        } else {
            const json& job = req.at("job");
            if (!job.is_object()) throw RequestError(400, "'job' must be an object");

            std::int64_t time = 0;
            if (!job.contains("time")) throw RequestError(400, "missing field: time");
            const json& jt = job.at("time");
            std::optional<std::int64_t> parsed;
            if (jt.is_string())
                parsed = parse_timestamp(jt.get<std::string>());
            else if (jt.is_number_integer())
                parsed = jt.get<std::int64_t>();
            if (!parsed) throw RequestError(400, "field must be a timestamp: time");
            time = *parsed;

            RawFeatures raw;
            const TemporalFields t = derive_temporal(time);
            raw.ts_hour = t.hour;
            raw.ts_dayofweek = t.day_of_week;
            raw.ts_weekofyear = t.week_of_year;
            raw.ts_month = t.month;
            raw.ts_is_weekend = t.is_weekend;
            const ProfileParts parts = parse_build_profile(
                require_string(job, "build_profile"), model_.feature_schema.profile_delimiter);
            raw.arch = parts.arch;
            raw.compiler = parts.compiler;
            raw.opt_level = parts.opt_level;
            raw.make_type = require_string(job, "make_type");
            raw.jobs = require_number(job, "jobs");
            raw.branch_id = require_string(job, "branch_id");
            raw.memreq_mib = mb_to_mib(require_number(job, "memreq_mb"));

            // Caller-supplied recent same-group history, oldest first; absent
            // entries are imputed exactly like the offline pipeline.
            std::vector<double> history;
            if (job.contains("history_max_rss_mib")) {
                const json& h = job.at("history_max_rss_mib");
                if (!h.is_array())
                    throw RequestError(400, "field must be an array: history_max_rss_mib");
                for (const auto& v : h) {
                    if (!v.is_number())
                        throw RequestError(400, "history_max_rss_mib entries must be numbers");
                    history.push_back(v.get<double>());
                }
            }
            const double impute = model_.encoder.global_target_median;
            const std::size_t hn = history.size();
            HistoryRow& hist = raw.history;
            hist.lags.resize(static_cast<std::size_t>(model_.feature_schema.lag_count));
            for (std::size_t j = 1; j <= hist.lags.size(); ++j)
                hist.lags[j - 1] = hn >= j ? history[hn - j] : impute;
            const std::size_t w =
                std::min<std::size_t>(static_cast<std::size_t>(model_.feature_schema.rolling_window), hn);
            if (w == 0) {
                hist.rolling_mean = hist.rolling_max = hist.rolling_p95 = hist.rolling_std = impute;
            } else {
                std::vector<double> vals(history.end() - static_cast<std::ptrdiff_t>(w),
                                         history.end());
                hist.rolling_mean = mean(vals);
                hist.rolling_max = *std::max_element(vals.begin(), vals.end());
                hist.rolling_p95 = nearest_rank_quantile(vals, 0.95);
                hist.rolling_std = population_stddev(vals);
            }
            hist.seq_index = static_cast<double>(hn);
            hist.expanding_median = hn > 0 ? median(history) : impute;

            try {
                encode_row(raw, model_.encoder, model_.feature_schema, row);
            } catch (const ConsistencyError& e) {
                throw RequestError(422, e.what());
            }
        }

        const auto t0 = std::chrono::steady_clock::now();
        const double allocation = predict_allocation(model_, row);
        const double latency =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        served_.fetch_add(1);

        json resp;
        resp["allocation_mib"] = allocation;
        resp["alpha"] = model_.alpha;
        resp["safety_factor"] = model_.safety_factor;
        resp["model_id"] = model_id_;
        resp["latency_seconds"] = latency;
        return {200, resp.dump()};
    } catch (const RequestError& e) {
        return {e.status, error_body(e.what())};
    } catch (const std::exception& e) {
        return {500, error_body(std::string("internal error: ") + e.what())};
    }
}

bool PredictionService::serve(const std::string& host, int port) {
    auto& server = impl_->server;
    server.Post("/predict", [this](const httplib::Request& req, httplib::Response& res) {
        const ServiceReply reply = handle_predict(req.body);
        res.status = reply.status;
        res.set_content(reply.body, "application/json");
    });
    server.Get("/health", [this](const httplib::Request&, httplib::Response& res) {
        const ServiceReply reply = handle_health();
        res.status = reply.status;
        res.set_content(reply.body, "application/json");
    });
    return server.listen(host, port);
}

void PredictionService::stop() { impl_->server.stop(); }

std::pair<std::string, int> parse_bind_address(const std::string& bind) {
    const auto pos = bind.rfind(':');
    if (pos == std::string::npos || pos == 0 || pos + 1 >= bind.size())
        throw ArgumentError("bind address must be host:port");
    const std::string host = bind.substr(0, pos);
    int port = 0;
    try {
        port = std::stoi(bind.substr(pos + 1));
    } catch (const std::exception&) {
        throw ArgumentError("invalid port in bind address");
    }
    if (port < 1 || port > 65535) throw ArgumentError("port out of range");
    return {host, port};
}

} // namespace memfit
