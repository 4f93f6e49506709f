#pragma once

// Proof-of-work block chain. Each approved contract version becomes one block
// carrying the contract digest, the new owner's key and a signature by the
// previous block's owner. A block joins the chain once a 51% miner quorum
// reports it valid.

#include "pact/core.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pact {

inline constexpr std::size_t kContractIdHexLength = 32;
inline constexpr std::size_t kDefaultDifficulty = 6;

struct BlockPayload {
    std::string contract_id;
    std::string parent_contract_id;
    Digest256 contract_hash;
    std::vector<std::string> signatory_ids;
    std::string owner_pubkey;
    std::string prev_owner_sig;

    friend bool operator==(const BlockPayload&, const BlockPayload&) = default;
};

struct BlockHeader {
    std::uint64_t index = 0;
    std::uint64_t timestamp = 0;
    std::string miner_id;
    BlockPayload payload;
    Digest256 prev_hash;
    std::uint64_t nonce = 0;

    friend bool operator==(const BlockHeader&, const BlockHeader&) = default;
};

struct Block {
    BlockHeader header;
    Digest256 hash;

    friend bool operator==(const Block&, const Block&) = default;
};

/// The bytes a block hash commits to: eleven LF-separated fields, no
/// trailing LF, in the order index, timestamp, miner_id, contract_id,
/// parent_contract_id, contract_hash, signatory_ids (comma-joined),
/// owner_pubkey, prev_owner_sig, prev_hash, nonce.
std::string block_preimage(const BlockHeader& header);

Digest256 hash_block(const BlockHeader& header);

/// Message the previous block's owner signs to hand over to a new owner.
std::string ownership_message(const Digest256& contract_hash, std::string_view owner_pubkey,
                              const Digest256& prev_hash);

/// The fixed block 0 for a chain whose root owner has `root_owner_pubkey`.
Block make_genesis(std::string_view root_owner_pubkey);

struct MineOptions {
    std::uint64_t nonce_start = 0;
    /// Give up after this many hash attempts (MiningBudgetExceeded).
    std::optional<std::uint64_t> max_attempts;
    /// Worker threads scanning disjoint nonce ranges; 0 means hardware concurrency.
    unsigned workers = 1;
};

struct MineResult {
    Block block;
    std::uint64_t attempts = 0;
};

/// Finds the smallest nonce >= nonce_start whose hash has `difficulty`
/// leading '0' hex characters. The template's nonce is ignored. The result
/// does not depend on the worker count.
MineResult mine(const BlockHeader& tmpl, std::size_t difficulty, const MineOptions& opts = {});

/// Rules checked by verify_block, in evaluation order.
enum class BlockRule {
    MalformedFields,
    HashMismatch,
    InsufficientWork,
    BrokenLinkage,
    BadOwnerSignature,
    GenesisMismatch,
};

std::string_view to_string(BlockRule rule) noexcept;

/// First rule `block` breaks relative to `prev`, or nullopt when valid.
std::optional<BlockRule> check_block(const Block& block, const Block& prev, std::size_t difficulty);

bool verify_block(const Block& block, const Block& prev, std::size_t difficulty);

/// Smallest T with 100*T >= 51*miner_count.
std::size_t quorum_threshold(std::size_t miner_count);

struct AppendOutcome {
    bool accepted = false;
    std::size_t yes_count = 0;
    std::size_t threshold = 0;
    std::string reason;
};

struct ChainVerdict {
    bool valid = true;
    std::optional<std::uint64_t> first_bad_index;
    std::optional<BlockRule> rule;
};

struct HistoryEntry {
    std::string version_id;
    Digest256 contract_hash;
    std::string owner_pubkey;
    std::uint64_t block_index = 0;

    friend bool operator==(const HistoryEntry&, const HistoryEntry&) = default;
};

/// Append-only list of blocks starting at genesis. Not internally
/// synchronised.
class Chain {
public:
    Chain(std::string_view root_owner_pubkey, std::size_t difficulty);

    /// Adopts an existing block list (e.g. loaded from disk) without
    /// validating it; call verify_chain to check it.
    Chain(std::vector<Block> blocks, std::size_t difficulty);

    const std::vector<Block>& blocks() const noexcept { return blocks_; }
    const Block& tip() const noexcept { return blocks_.back(); }
    std::size_t size() const noexcept { return blocks_.size(); }
    std::size_t difficulty() const noexcept { return difficulty_; }
    const std::string& root_owner_pubkey() const noexcept { return blocks_.front().header.payload.owner_pubkey; }

    /// Appends iff at least quorum_threshold(verdicts.size()) verdicts are true.
    AppendOutcome append_block(const Block& block, const std::vector<bool>& verdicts);

    /// Earliest block recording `contract_hash`, if any.
    const Block* find_by_hash(const Digest256& contract_hash) const noexcept;
    const Block* find_by_contract(std::string_view contract_id) const noexcept;

    /// Block template for the next block: index, prev_hash and payload filled.
    BlockHeader next_template(BlockPayload payload, std::uint64_t timestamp,
                              std::string miner_id) const;

private:
    std::vector<Block> blocks_;
    std::size_t difficulty_;
};

ChainVerdict verify_chain(const Chain& chain);

/// Versions of the lineage rooted at original `root_contract_id`, in block
/// order. Throws Error(UnknownContract) when no original with that id exists.
std::vector<HistoryEntry> contract_history(const Chain& chain, std::string_view root_contract_id);

/// Walks parent links up to the original version of `contract_id`.
std::string lineage_root(const Chain& chain, std::string_view contract_id);

}  // namespace pact
