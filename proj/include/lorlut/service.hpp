#pragma once

#include <chrono>
#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <string_view>

#include "lorlut/lowrank.hpp"

namespace lorlut {

struct ServiceConfig {
    int max_sessions = 16;
    /// Idle time after which a session is dropped.
    std::chrono::milliseconds ttl = std::chrono::minutes(30);
    /// Upper bound on the steps a fit request may run.
    int max_fit_steps = 2000;
    std::size_t payload_limit = 64u << 20;
    std::string cors_origin = "*";
    /// Model given to sessions created without one; identity (G = 33, K = 0,
    /// R = 0) when unset.
    std::optional<LorLutModel> default_model;
};

/// In-memory session server for the viewer HTTP API.
///
///   GET  /v1/health
///   POST /v1/sessions                      image body, or multipart "image" [+ "model"]
///   PUT  /v1/sessions/{id}/scales          JSON array (or {"scales": [...]})
///   GET  /v1/sessions/{id}/preview         PNG
///   GET  /v1/sessions/{id}/factors         JSON
///   GET  /v1/sessions/{id}/lut/slice       ?axis=r|g|b&index=k
///   POST /v1/sessions/{id}/fit             image body, or multipart "target" [+ "config"]
///   GET  /v1/sessions/{id}/export.cube
class Service {
public:
    explicit Service(ServiceConfig cfg = {});
    ~Service();
    Service(const Service&) = delete;
    Service& operator=(const Service&) = delete;

    /// Binds without serving yet; port 0 picks a free port. Returns the bound
    /// port, or -1 when binding failed.
    int bind(const std::string& host, int port);
    /// Blocks serving requests until stop().
    bool run();
    void stop();
    bool running() const;

    std::size_t session_count() const;
    bool fit_running(std::string_view id) const;

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace lorlut
