#pragma once

#include "memfit/ensemble.hpp"

#include <atomic>
#include <chrono>
#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace memfit {

struct ServiceReply {
    int status = 200;
    std::string body; ///< application/json
};

/// Realtime prediction endpoint around an immutable EnsembleModel. The
/// request handlers are plain functions of the request body, so the wire
/// behaviour is testable without sockets; serve() binds them to HTTP.
class PredictionService {
public:
    explicit PredictionService(EnsembleModel model);
    ~PredictionService();

    PredictionService(const PredictionService&) = delete;
    PredictionService& operator=(const PredictionService&) = delete;

    /// POST /predict. Body carries either {"features": {column: number}}
    /// over the expanded column names, or {"job": {...}} with a raw
    /// descriptor (history optional, imputed like the feature pipeline).
    /// 400 = malformed request, 422 = schema mismatch, 500 = internal.
    ServiceReply handle_predict(const std::string& request_body);

    /// GET /health.
    ServiceReply handle_health() const;

    const std::string& model_id() const { return model_id_; }
    const EnsembleModel& model() const { return model_; }
    std::uint64_t predictions_served() const { return served_.load(); }

    /// Blocks until stop(); returns false if the address cannot be bound.
    bool serve(const std::string& host, int port);
    void stop();

private:
    struct Impl;

    EnsembleModel model_;
    std::string model_id_;
    std::vector<std::string> columns_;
    std::map<std::string, std::size_t> column_index_;
    std::chrono::steady_clock::time_point started_;
    std::atomic<std::uint64_t> served_{0};
    std::unique_ptr<Impl> impl_;
};

/// "host:port" -> (host, port). Throws ArgumentError on malformed input.
std::pair<std::string, int> parse_bind_address(const std::string& bind);

} // namespace memfit
