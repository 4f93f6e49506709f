#include "pact/service.hpp"

#include <httplib.h>

#include <algorithm>
#include <cctype>
#include <vector>

namespace pact {

using nlohmann::json;
using nlohmann::ordered_json;

namespace {

std::vector<std::string_view> split_path(std::string_view path) {
    if (auto q = path.find('?'); q != std::string_view::npos) path = path.substr(0, q);
    std::vector<std::string_view> parts;
    std::size_t pos = 0;
    while (pos < path.size()) {
        while (pos < path.size() && path[pos] == '/') ++pos;
        const std::size_t end = path.find('/', pos);
        const std::size_t stop = end == std::string_view::npos ? path.size() : end;
        if (stop > pos) parts.push_back(path.substr(pos, stop - pos));
        pos = stop;
    }
    return parts;
}

std::string lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

template <typename T>
T require(const json& body, const char* key) {
    if (!body.is_object() || !body.contains(key)) {
        throw Error(ErrorCode::InvalidArgument, std::string("missing field '") + key + "'");
    }
    try {
        return body.at(key).get<T>();
    } catch (const json::exception&) {
        throw Error(ErrorCode::InvalidArgument, std::string("field '") + key + "' has the wrong type");
    }
}

template <typename T>
T optional_field(const json& body, const char* key, T fallback) {
    if (!body.is_object() || !body.contains(key) || body.at(key).is_null()) return fallback;
    return require<T>(body, key);
}

ApiResponse fail(int status, std::string_view code, std::string_view message) {
    return ApiResponse{status, error_body(code, message)};
}

}  // namespace

int http_status(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::InvalidArgument:
        case ErrorCode::Encoding:
        case ErrorCode::Decode:
            return 400;
        case ErrorCode::UnknownGroup:
        case ErrorCode::UnknownProposal:
        case ErrorCode::UnknownContract:
            return 404;
        case ErrorCode::Storage:
        case ErrorCode::CorruptLog:
        case ErrorCode::InvalidChain:
            return 500;
        default:
            return 409;
    }
}

ordered_json error_body(std::string_view code, std::string_view message) {
    ordered_json j;
    j["error"] = {{"code", std::string(code)}, {"message", std::string(message)}};
    return j;
}

ordered_json to_json(const ConsensusGroup& g) {
    ordered_json sigs = ordered_json::array();
    for (const auto& s : g.signatories) {
        sigs.push_back({{"id", s.id}, {"public_key", s.public_key}, {"display_name", s.display_name}});
    }
    ordered_json j;
    j["id"] = g.id;
    j["signatories"] = std::move(sigs);
    j["proposal_ids"] = g.proposal_ids;
    return j;
}

ordered_json to_json(const Proposal& p) {
    ordered_json subs = ordered_json::array();
    for (const auto& s : p.submissions) {
        ordered_json e;
        e["signatory_id"] = s.signatory_id;
        e["submitted_hash"] = s.submitted_hash.hex();
        e["vote"] = s.vote;
        e["hash_matches"] = s.submitted_hash == p.expected_hash;
        e["signature"] = s.vote_signature.hex();
        subs.push_back(std::move(e));
    }
    ordered_json j;
    j["id"] = p.id;
    j["group_id"] = p.group_id;
    j["kind"] = std::string(to_string(p.kind));
    j["parent_version_id"] = p.parent_version_id;
    j["text"] = p.text.bytes();
    j["expected_hash"] = p.expected_hash.hex();
    j["status"] = std::string(to_string(p.status));
    j["tally"] = std::string(to_string(tally(p)));
    j["required_signatories"] = p.required_signatories;
    j["submissions"] = std::move(subs);
    j["version_id"] = p.version_id;
    return j;
}

ordered_json to_json(const ApprovedVersion& v) {
    ordered_json j;
    j["version_id"] = v.version_id;
    j["kind"] = std::string(to_string(v.kind));
    j["parent_version_id"] = v.parent_version_id;
    j["root_version_id"] = v.root_version_id;
    j["group_id"] = v.group_id;
    j["proposal_id"] = v.proposal_id;
    j["contract_hash"] = v.contract_hash.hex();
    j["signatory_ids"] = v.signatory_ids;
    j["owner_id"] = v.owner_id;
    j["owner_pubkey"] = v.owner_pubkey;
    return j;
}

ordered_json to_json(const FinalizeResult& r) {
    ordered_json j;
    j["version"] = to_json(r.version);
    j["owner"] = {{"id", r.owner.id}, {"public_key", r.owner.public_key}};
    j["block"] = block_to_json(r.block);
    j["quorum"] = {{"yes_count", r.outcome.yes_count}, {"threshold", r.outcome.threshold}};
    return j;
}

ordered_json to_json(const ChainVerdict& v, std::size_t length) {
    ordered_json j;
    j["valid"] = v.valid;
    j["length"] = length;
    j["first_bad_index"] = v.first_bad_index ? ordered_json(*v.first_bad_index) : ordered_json();
    j["rule"] = v.rule ? ordered_json(std::string(to_string(*v.rule))) : ordered_json();
    return j;
}

ordered_json to_json(const HistoryEntry& e) {
    ordered_json j;
    j["version_id"] = e.version_id;
    j["contract_hash"] = e.contract_hash.hex();
    j["owner_pubkey"] = e.owner_pubkey;
    j["block_index"] = e.block_index;
    return j;
}

ordered_json to_json(const Attestation& a) {
    ordered_json j;
    j["found"] = a.found;
    j["digest"] = a.digest.hex();
    if (a.found) {
        j["block_index"] = a.block_index;
        j["version_id"] = a.version_id;
        j["lineage_root"] = a.lineage_root;
        j["owner_pubkey"] = a.owner_pubkey;
    }
    return j;
}

ApiResponse Api::handle(std::string_view method, std::string_view path, std::string_view body,
                        const Headers& headers) const {
    json parsed = json::object();
    if (!body.empty()) {
        parsed = json::parse(body, nullptr, false);
        if (parsed.is_discarded()) {
            return fail(400, "BAD_REQUEST", "request body is not valid JSON");
        }
    }
    Headers normalized;
    for (const auto& [k, v] : headers) normalized[lower(k)] = v;
    try {
        return dispatch(method, path, parsed, normalized);
    } catch (const Error& e) {
        const int status = http_status(e.code());
        const std::string_view code = (e.code() == ErrorCode::InvalidArgument ||
                                       e.code() == ErrorCode::Decode)
                                          ? std::string_view("BAD_REQUEST")
                                          : to_string(e.code());
        return fail(status, code, e.what());
    } catch (const std::exception& e) {
        return fail(500, "INTERNAL", e.what());
    }
}

ApiResponse Api::dispatch(std::string_view method, std::string_view path, const json& body,
                          const Headers& headers) const {
    const auto seg = split_path(path);
    const bool get = method == "GET";
    const bool post = method == "POST";

    if (seg.size() == 1 && seg[0] == "groups" && post) {
        std::vector<Signatory> sigs;
        for (const auto& s : require<json>(body, "signatories")) {
            sigs.push_back(Signatory{require<std::string>(s, "id"),
                                     require<std::string>(s, "public_key"),
                                     optional_field<std::string>(s, "display_name", "")});
        }
        return {201, to_json(engine_.create_group(std::move(sigs)))};
    }
    if (seg.size() == 2 && seg[0] == "groups" && get) {
        return {200, to_json(engine_.group(seg[1]))};
    }
    if (seg.size() == 3 && seg[0] == "groups" && seg[2] == "proposals" && post) {
        const ProposalKind kind =
            parse_proposal_kind(optional_field<std::string>(body, "kind", "original"));
        const Proposal p = engine_.open_proposal(
            seg[1], require<std::string>(body, "text"), kind,
            optional_field<std::string>(body, "parent_version_id", ""));
        return {201, to_json(p)};
    }
    if (seg.size() == 2 && seg[0] == "proposals" && get) {
        return {200, to_json(engine_.proposal(seg[1]))};
    }
    if (seg.size() == 3 && seg[0] == "proposals" && seg[2] == "votes" && post) {
        const std::string signatory = require<std::string>(body, "signatory_id");
        const auto hdr = headers.find(lower(kSignatoryHeader));
        if (hdr == headers.end()) {
            return fail(401, "UNAUTHENTICATED",
                        "missing " + std::string(kSignatoryHeader) + " header");
        }
        if (hdr->second != signatory) {
            return fail(403, "SIGNATORY_MISMATCH",
                        "header identity does not match signatory_id");
        }
        const Proposal p = engine_.cast_vote(
            seg[1], signatory, Digest256::from_hex(require<std::string>(body, "submitted_hash")),
            require<bool>(body, "vote"),
            Signature::from_hex(require<std::string>(body, "signature")));
        return {200, to_json(p)};
    }
    if (seg.size() == 3 && seg[0] == "proposals" && seg[2] == "finalize" && post) {
        return {200, to_json(engine_.finalize(seg[1]))};
    }
    if (seg.size() == 1 && seg[0] == "chain" && get) {
        ordered_json arr = ordered_json::array();
        for (const auto& b : engine_.chain_blocks()) arr.push_back(block_to_json(b));
        return {200, std::move(arr)};
    }
    if (seg.size() == 2 && seg[0] == "chain" && seg[1] == "verify" && get) {
        const ChainVerdict v = engine_.verify();
        return {200, to_json(v, engine_.chain_blocks().size())};
    }
    if (seg.size() == 3 && seg[0] == "contracts" && seg[2] == "history" && get) {
        ordered_json versions = ordered_json::array();
        for (const auto& e : engine_.history(seg[1])) versions.push_back(to_json(e));
        ordered_json j;
        j["contract_id"] = std::string(seg[1]);
        j["versions"] = std::move(versions);
        return {200, std::move(j)};
    }
    if (seg.size() == 1 && seg[0] == "verify" && post) {
        return {200, to_json(engine_.verify_document(require<std::string>(body, "text")))};
    }
    if (seg.size() == 2 && seg[0] == "sim" && seg[1] == "run" && post) {
        const SimReport report = engine_.run_sim(sim_config_from_json(body));
        ordered_json j = report_summary(report);
        if (optional_field<bool>(body, "include_log", false)) {
            ordered_json log = ordered_json::array();
            for (const auto& r : report.log) {
                log.push_back({{"request_id", r.request_id}, {"valid", r.valid},
                               {"yes_count", r.yes_count}, {"accepted", r.accepted}});
            }
            j["log"] = std::move(log);
        }
        return {200, std::move(j)};
    }
    return fail(404, "NOT_FOUND", std::string(method) + " " + std::string(path) + " is not a route");
}

struct HttpServer::Impl {
    httplib::Server svr;
};

HttpServer::HttpServer(const Api& api) : impl_(std::make_unique<Impl>()) {
    auto adapt = [&api](const httplib::Request& req, httplib::Response& res) {
        Headers headers;
        for (const auto& [k, v] : req.headers) headers[k] = v;
        const ApiResponse r = api.handle(req.method, req.path, req.body, headers);
        res.status = r.status;
        res.set_content(r.body.dump(), "application/json");
    };
    impl_->svr.Get(".*", adapt);
    impl_->svr.Post(".*", adapt);
}

HttpServer::~HttpServer() = default;

int HttpServer::bind(const std::string& host, int port) {
    if (port == 0) return impl_->svr.bind_to_any_port(host);
    return impl_->svr.bind_to_port(host, port) ? port : -1;
}

void HttpServer::run() { impl_->svr.listen_after_bind(); }

void HttpServer::stop() { impl_->svr.stop(); }

bool serve(const Api& api, const std::string& host, int port) {
    HttpServer server(api);
    if (server.bind(host, port) < 0) return false;
    server.run();
    return true;
}

ApiResponse remote_call(const std::string& base_url, std::string_view method,
                        std::string_view path, const json& body, const Headers& headers) {
    httplib::Client cli(base_url);
    cli.set_connection_timeout(5);
    cli.set_read_timeout(120);
    httplib::Headers h;
    for (const auto& [k, v] : headers) h.emplace(k, v);
    const std::string p(path);
    httplib::Result res = method == "GET"
                              ? cli.Get(p, h)
                              : cli.Post(p, h, body.is_null() ? std::string("{}") : body.dump(),
                                         "application/json");
    if (!res) {
        return {0, error_body("UNREACHABLE", "cannot reach " + base_url + ": " +
                                                 httplib::to_string(res.error()))};
    }
    ApiResponse out;
    out.status = res->status;
    const json parsed = json::parse(res->body, nullptr, false);
    if (parsed.is_discarded()) {
        out.body = error_body("BAD_RESPONSE", "service returned non-JSON body");
    } else {
        out.body = ordered_json::parse(res->body);
    }
    return out;
}

}  // namespace pact
