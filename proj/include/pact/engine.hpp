#pragma once

// The platform: consensus registry, chain, miner roster and persistent store
// behind one serialized writer. Reads take a shared lock and return copies.

#include "pact/consensus.hpp"
#include "pact/ledger.hpp"
#include "pact/simnet.hpp"
#include "pact/store.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

namespace pact {

using Clock = std::function<std::uint64_t()>;

/// Wall-clock Unix seconds.
Clock system_clock();
/// Always returns `t`.
Clock fixed_clock(std::uint64_t t);

struct EngineOptions {
    std::filesystem::path data_dir;
    /// Applied only when data_dir is fresh; an existing config.json wins.
    StoreConfig config;
    /// Makes owner keys and miner draws reproducible.
    std::optional<std::uint64_t> seed;
    Clock clock = system_clock();
    bool fsync = false;
    unsigned mining_workers = 1;
};

struct FinalizeResult {
    ApprovedVersion version;
    OwnerRecord owner;
    Block block;
    AppendOutcome outcome;
};

struct Attestation {
    bool found = false;
    Digest256 digest;
    std::uint64_t block_index = 0;
    std::string version_id;
    std::string lineage_root;
    std::string owner_pubkey;
};

class Engine {
public:
    explicit Engine(EngineOptions opts);

    Engine(const Engine&) = delete;
    Engine& operator=(const Engine&) = delete;

    ConsensusGroup create_group(std::vector<Signatory> signatories);
    Proposal open_proposal(std::string_view group_id, std::string_view text, ProposalKind kind,
                           std::string_view parent_version_id);
    Proposal cast_vote(std::string_view proposal_id, std::string_view signatory_id,
                       const Digest256& submitted_hash, bool vote, const Signature& signature);

    /// Mints the owner, mines the block and puts it to the miner quorum.
    /// Nothing is recorded unless the quorum accepts (Error(QuorumRejected)).
    FinalizeResult finalize(std::string_view proposal_id);

    ConsensusGroup group(std::string_view id) const;
    Proposal proposal(std::string_view id) const;
    std::vector<Block> chain_blocks() const;
    ChainVerdict verify() const;
    std::vector<HistoryEntry> history(std::string_view root_contract_id) const;
    Attestation verify_document(std::string_view text) const;
    SimReport run_sim(const SimConfig& config) const;

    StoreConfig config() const;
    const std::filesystem::path& data_dir() const noexcept { return store_.paths().dir; }

private:
    KeyPair owner_keypair_for(std::string_view proposal_id, unsigned attempt) const;

    EngineOptions opts_;
    mutable std::shared_mutex mutex_;
    StoreConfig config_;
    ConsensusRegistry registry_;
    Chain chain_;
    Store store_;
    std::vector<MinerProfile> miners_;
    std::uint64_t rng_seed_;
    unsigned finalize_attempts_ = 0;
};

}  // namespace pact
