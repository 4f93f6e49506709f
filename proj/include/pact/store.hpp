#pragma once

// On-disk layout of a data directory:
//
//   events.jsonl   one EventRecord per line, seq 1, 2, 3, ...
//   chain.jsonl    one block per line, genesis first
//   texts/         canonical contract texts at texts/<digest>.txt
//   vault.json     VeriOwner private keys, mode 0600
//   config.json    difficulty and miner roster fixed at creation
//
// State is rebuilt by replaying events.jsonl and cross-checking chain.jsonl.

#include "pact/consensus.hpp"
#include "pact/ledger.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace pact {

enum class EventKind { GroupCreated, ProposalOpened, VoteCast, ProposalFinalized, BlockAccepted };

std::string_view to_string(EventKind kind) noexcept;
EventKind parse_event_kind(std::string_view s);

struct EventRecord {
    std::uint64_t seq = 0;
    EventKind kind = EventKind::GroupCreated;
    nlohmann::ordered_json body;
    std::uint64_t recorded_at = 0;
};

nlohmann::ordered_json to_json(const EventRecord& rec);

// Event bodies. Private key material never appears in any of them.
nlohmann::ordered_json group_created_body(const ConsensusGroup& group);
nlohmann::ordered_json proposal_opened_body(const Proposal& proposal);
nlohmann::ordered_json vote_cast_body(std::string_view proposal_id, const Submission& submission);
nlohmann::ordered_json proposal_finalized_body(const ApprovedVersion& version);
nlohmann::ordered_json block_accepted_body(const Block& block, const AppendOutcome& outcome);

/// Keys in preimage order followed by "hash".
nlohmann::ordered_json block_to_json(const Block& block);
/// Throws Error(Decode) on missing or mistyped fields.
Block block_from_json(const nlohmann::json& j);

/// Appends `line` plus LF as a single write. On failure the file is cut back
/// to its previous length so no partial record survives.
void append_line(const std::filesystem::path& path, std::string_view line, bool sync);

/// Reads a JSON-lines file. Throws Error(CorruptLog) naming the 1-based line
/// of the first unparseable or unterminated record.
std::vector<nlohmann::json> read_json_lines(const std::filesystem::path& path);

class EventLog {
public:
    EventLog(std::filesystem::path path, bool sync, std::uint64_t last_seq = 0)
        : path_(std::move(path)), sync_(sync), last_seq_(last_seq) {}

    /// Returns the assigned seq. Bodies must serialise to one line.
    std::uint64_t append(EventKind kind, nlohmann::ordered_json body, std::uint64_t recorded_at);

    /// Throws Error(CorruptLog) on unparseable lines or seq gaps.
    static std::vector<EventRecord> read_all(const std::filesystem::path& path);

    std::uint64_t last_seq() const noexcept { return last_seq_; }
    const std::filesystem::path& path() const noexcept { return path_; }

private:
    std::filesystem::path path_;
    bool sync_;
    std::uint64_t last_seq_;
};

/// Private keys of VeriOwners, keyed by owner id. Rewritten atomically with
/// owner-only permissions on every put.
class KeyVault {
public:
    explicit KeyVault(std::filesystem::path path);

    void put(const std::string& owner_id, const std::string& private_key);
    std::optional<std::string> get(std::string_view owner_id) const;
    bool contains(std::string_view owner_id) const { return keys_.contains(std::string(owner_id)); }

private:
    std::filesystem::path path_;
    std::map<std::string, std::string> keys_;
};

struct StoreConfig {
    std::size_t difficulty = 3;
    std::size_t miners = 5;
    double miner_noise = 0.0;

    friend bool operator==(const StoreConfig&, const StoreConfig&) = default;
};

struct StorePaths {
    std::filesystem::path dir;

    std::filesystem::path events() const { return dir / "events.jsonl"; }
    std::filesystem::path chain() const { return dir / "chain.jsonl"; }
    std::filesystem::path texts() const { return dir / "texts"; }
    std::filesystem::path vault() const { return dir / "vault.json"; }
    std::filesystem::path config() const { return dir / "config.json"; }
    std::filesystem::path text_file(const Digest256& digest) const {
        return texts() / (digest.hex() + ".txt");
    }
};

inline constexpr std::string_view kRootOwnerId = "root";

struct LoadOptions {
    /// Used only when the directory is fresh.
    StoreConfig config;
    /// Derives the root owner key when the directory is fresh; random otherwise.
    std::optional<std::uint64_t> seed;
};

struct LoadedState {
    StoreConfig config;
    ConsensusRegistry registry;
    Chain chain;
    std::uint64_t last_seq = 0;
};

/// Opens or initialises a data directory and replays it. A fresh directory
/// gets a root owner in the vault and a genesis-only chain. Throws
/// Error(CorruptLog) for unreadable records and Error(InvalidChain) when the
/// chain fails verification or disagrees with the event log.
LoadedState load_state(const StorePaths& paths, const LoadOptions& opts = {});

/// Writer for everything under a data directory.
class Store {
public:
    Store(StorePaths paths, bool sync, std::uint64_t last_seq);

    std::uint64_t append_event(EventKind kind, nlohmann::ordered_json body,
                               std::uint64_t recorded_at);
    void append_block(const Block& block);
    void put_text(const CanonicalText& text);
    std::optional<std::string> get_text(const Digest256& digest) const;

    KeyVault& vault() noexcept { return vault_; }
    const KeyVault& vault() const noexcept { return vault_; }
    const StorePaths& paths() const noexcept { return paths_; }

private:
    StorePaths paths_;
    bool sync_;
    EventLog events_;
    KeyVault vault_;
};

}  // namespace pact
