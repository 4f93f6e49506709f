#pragma once

// JSON-over-HTTP surface. Api::handle is transport-free so the same route
// table serves the HTTP listener, the CLI's local mode and the tests.
//
//   POST /groups                      create a consensus group
//   GET  /groups/{id}
//   POST /groups/{id}/proposals       open an original or amendment proposal
//   GET  /proposals/{id}
//   POST /proposals/{id}/votes        cast a signed vote (X-Pact-Signatory header)
//   POST /proposals/{id}/finalize     mint owner, mine, put to the miner quorum
//   GET  /chain
//   GET  /chain/verify
//   GET  /contracts/{id}/history
//   POST /verify                      attest a document text
//   POST /sim/run                     run a miner-noise simulation

#include "pact/engine.hpp"
#include "pact/error.hpp"

#include <json.hpp>

#include <map>
#include <memory>
#include <string>
#include <string_view>

namespace pact {

inline constexpr std::string_view kSignatoryHeader = "X-Pact-Signatory";

struct ApiResponse {
    int status = 200;
    nlohmann::ordered_json body;
};

using Headers = std::map<std::string, std::string>;

/// HTTP status for a library error code.
int http_status(ErrorCode code) noexcept;

nlohmann::ordered_json error_body(std::string_view code, std::string_view message);

nlohmann::ordered_json to_json(const ConsensusGroup& group);
nlohmann::ordered_json to_json(const Proposal& proposal);
nlohmann::ordered_json to_json(const ApprovedVersion& version);
nlohmann::ordered_json to_json(const FinalizeResult& result);
nlohmann::ordered_json to_json(const ChainVerdict& verdict, std::size_t length);
nlohmann::ordered_json to_json(const HistoryEntry& entry);
nlohmann::ordered_json to_json(const Attestation& attestation);

class Api {
public:
    explicit Api(Engine& engine) : engine_(engine) {}

    /// Decodes, delegates to the engine and encodes. Never throws.
    ApiResponse handle(std::string_view method, std::string_view path, std::string_view body,
                       const Headers& headers = {}) const;

private:
    ApiResponse dispatch(std::string_view method, std::string_view path,
                         const nlohmann::json& body, const Headers& headers) const;

    Engine& engine_;
};

/// HTTP listener over an Api. bind, then run (blocking) on one thread and
/// stop from another.
class HttpServer {
public:
    explicit HttpServer(const Api& api);
    ~HttpServer();
    HttpServer(const HttpServer&) = delete;
    HttpServer& operator=(const HttpServer&) = delete;

    /// Port 0 picks a free port. Returns the bound port, or -1.
    int bind(const std::string& host, int port);
    void run();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

/// Blocks serving `api` on host:port until the process is stopped.
/// Returns false if the address cannot be bound.
bool serve(const Api& api, const std::string& host, int port);

/// Sends one request to a running service at `base_url` (http://host:port).
/// Transport failures come back as status 0 with an error body.
ApiResponse remote_call(const std::string& base_url, std::string_view method,
                        std::string_view path, const nlohmann::json& body,
                        const Headers& headers = {});

}  // namespace pact
