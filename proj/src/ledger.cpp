#include "pact/ledger.hpp"

#include "pact/error.hpp"

#include <sodium.h>

#include <algorithm>
#include <atomic>
#include <limits>
#include <thread>

namespace pact {

namespace {

constexpr std::string_view kGenesisMiner = "genesis";

std::string join_ids(const std::vector<std::string>& ids) {
    std::string out;
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (i) out += ',';
        out += ids[i];
    }
    return out;
}

// Preimage without the trailing nonce field; mining hashes prefix + nonce.
std::string preimage_prefix(const BlockHeader& h) {
    const BlockPayload& p = h.payload;
    std::string out;
    out.reserve(512);
    out += std::to_string(h.index);
    out += '\n';
    out += std::to_string(h.timestamp);
    out += '\n';
    out += h.miner_id;
    out += '\n';
    out += p.contract_id;
    out += '\n';
    out += p.parent_contract_id;
    out += '\n';
    out += p.contract_hash.hex();
    out += '\n';
    out += join_ids(p.signatory_ids);
    out += '\n';
    out += p.owner_pubkey;
    out += '\n';
    out += p.prev_owner_sig;
    out += '\n';
    out += h.prev_hash.hex();
    out += '\n';
    return out;
}

bool leading_zero_nibbles(const unsigned char* digest, std::size_t count) noexcept {
    for (std::size_t i = 0; i < count; ++i) {
        const unsigned char byte = digest[i / 2];
        const unsigned char nibble = (i % 2 == 0) ? (byte >> 4) : (byte & 0x0f);
        if (nibble != 0) return false;
    }
    return true;
}

bool well_formed(const Block& block) {
    const BlockHeader& h = block.header;
    const BlockPayload& p = h.payload;
    if (!is_valid_identifier(h.miner_id)) return false;
    if (!is_lower_hex(p.contract_id, kContractIdHexLength)) return false;
    if (!p.parent_contract_id.empty() &&
        !is_lower_hex(p.parent_contract_id, kContractIdHexLength)) {
        return false;
    }
    for (std::size_t i = 0; i < p.signatory_ids.size(); ++i) {
        if (!is_valid_identifier(p.signatory_ids[i])) return false;
        if (i > 0 && !(p.signatory_ids[i - 1] < p.signatory_ids[i])) return false;
    }
    return is_lower_hex(p.owner_pubkey, kKeyHexLength) &&
           is_lower_hex(p.prev_owner_sig, kSignatureHexLength);
}

}  // namespace

std::string block_preimage(const BlockHeader& header) {
    return preimage_prefix(header) + std::to_string(header.nonce);
}

Digest256 hash_block(const BlockHeader& header) {
    return sha256(block_preimage(header));
}

std::string ownership_message(const Digest256& contract_hash, std::string_view owner_pubkey,
                              const Digest256& prev_hash) {
    std::string msg = "OWN\n";
    msg += contract_hash.hex();
    msg += '\n';
    msg += owner_pubkey;
    msg += '\n';
    msg += prev_hash.hex();
    return msg;
}

Block make_genesis(std::string_view root_owner_pubkey) {
    Block g;
    g.header.index = 0;
    g.header.timestamp = 0;
    g.header.miner_id = std::string(kGenesisMiner);
    g.header.payload.contract_id = std::string(kContractIdHexLength, '0');
    g.header.payload.owner_pubkey = std::string(root_owner_pubkey);
    g.header.payload.prev_owner_sig = std::string(kSignatureHexLength, '0');
    g.header.nonce = 0;
    g.hash = hash_block(g.header);
    return g;
}

MineResult mine(const BlockHeader& tmpl, std::size_t difficulty, const MineOptions& opts) {
    if (difficulty > kDigestHexLength) {
        throw Error(ErrorCode::InvalidArgument, "difficulty exceeds digest length");
    }
    const std::string prefix = preimage_prefix(tmpl);
    crypto_hash_sha256_state base;
    crypto_hash_sha256_init(&base);
    crypto_hash_sha256_update(&base, reinterpret_cast<const unsigned char*>(prefix.data()),
                              prefix.size());

    constexpr std::uint64_t kMax = std::numeric_limits<std::uint64_t>::max();
    const std::uint64_t start = opts.nonce_start;
    const std::uint64_t limit =
        opts.max_attempts ? (kMax - start < *opts.max_attempts ? kMax : start + *opts.max_attempts)
                          : kMax;

    // Scans [from, to) and returns the first qualifying nonce, or kMax.
    auto scan = [&](std::uint64_t from, std::uint64_t to) {
        unsigned char digest[crypto_hash_sha256_BYTES];
        for (std::uint64_t n = from; n < to; ++n) {
            crypto_hash_sha256_state st = base;
            const std::string nonce = std::to_string(n);
            crypto_hash_sha256_update(&st, reinterpret_cast<const unsigned char*>(nonce.data()),
                                      nonce.size());
            crypto_hash_sha256_final(&st, digest);
            if (leading_zero_nibbles(digest, difficulty)) return n;
        }
        return kMax;
    };

    unsigned workers = opts.workers == 0 ? std::max(1u, std::thread::hardware_concurrency())
                                         : opts.workers;
    constexpr std::uint64_t kChunk = 1 << 14;
    std::uint64_t found = kMax;
    std::uint64_t base_nonce = start;

    while (found == kMax && base_nonce < limit) {
        if (workers == 1) {
            const std::uint64_t end = (limit - base_nonce > kChunk) ? base_nonce + kChunk : limit;
            found = scan(base_nonce, end);
            base_nonce = end;
            continue;
        }
        // Each worker takes one chunk of the round; the coordinator keeps the
        // smallest hit so the answer matches a sequential search.
        std::vector<std::uint64_t> hits(workers, kMax);
        std::vector<std::jthread> pool;
        std::uint64_t round_end = base_nonce;
        for (unsigned w = 0; w < workers && round_end < limit; ++w) {
            const std::uint64_t from = round_end;
            const std::uint64_t to = (limit - from > kChunk) ? from + kChunk : limit;
            round_end = to;
            pool.emplace_back([&, w, from, to] { hits[w] = scan(from, to); });
        }
        pool.clear();
        found = *std::min_element(hits.begin(), hits.end());
        base_nonce = round_end;
    }

    if (found == kMax) {
        throw Error(ErrorCode::MiningBudgetExceeded,
                    "no qualifying nonce within " +
                        std::to_string(opts.max_attempts.value_or(0)) + " attempts");
    }

    MineResult result;
    result.block.header = tmpl;
    result.block.header.nonce = found;
    result.block.hash = hash_block(result.block.header);
    result.attempts = found - start + 1;
    return result;
}

std::string_view to_string(BlockRule rule) noexcept {
    switch (rule) {
        case BlockRule::MalformedFields: return "malformed_fields";
        case BlockRule::HashMismatch: return "hash_mismatch";
        case BlockRule::InsufficientWork: return "insufficient_work";
        case BlockRule::BrokenLinkage: return "broken_linkage";
        case BlockRule::BadOwnerSignature: return "bad_owner_signature";
        case BlockRule::GenesisMismatch: return "genesis_mismatch";
    }
    return "unknown";
}

std::optional<BlockRule> check_block(const Block& block, const Block& prev, std::size_t difficulty) {
    if (!well_formed(block)) return BlockRule::MalformedFields;
    if (hash_block(block.header) != block.hash) return BlockRule::HashMismatch;
    if (!block.hash.has_zero_prefix(difficulty)) return BlockRule::InsufficientWork;
    if (block.header.index != prev.header.index + 1 || block.header.prev_hash != prev.hash) {
        return BlockRule::BrokenLinkage;
    }
    const BlockPayload& p = block.header.payload;
    try {
        const Signature sig = Signature::from_hex(p.prev_owner_sig);
        const std::string msg = ownership_message(p.contract_hash, p.owner_pubkey,
                                                  block.header.prev_hash);
        if (!verify_signature(prev.header.payload.owner_pubkey, msg, sig)) {
            return BlockRule::BadOwnerSignature;
        }
    } catch (const Error&) {
        return BlockRule::BadOwnerSignature;
    }
    return std::nullopt;
}

bool verify_block(const Block& block, const Block& prev, std::size_t difficulty) {
    return !check_block(block, prev, difficulty).has_value();
}

std::size_t quorum_threshold(std::size_t miner_count) {
    if (miner_count == 0) {
        throw Error(ErrorCode::InvalidArgument, "quorum needs at least one miner");
    }
    return (51 * miner_count + 99) / 100;
}

Chain::Chain(std::string_view root_owner_pubkey, std::size_t difficulty)
    : blocks_{make_genesis(root_owner_pubkey)}, difficulty_(difficulty) {}

Chain::Chain(std::vector<Block> blocks, std::size_t difficulty)
    : blocks_(std::move(blocks)), difficulty_(difficulty) {
    if (blocks_.empty()) {
        throw Error(ErrorCode::InvalidChain, "a chain must contain the genesis block");
    }
}

AppendOutcome Chain::append_block(const Block& block, const std::vector<bool>& verdicts) {
    AppendOutcome out;
    out.threshold = quorum_threshold(verdicts.size());
    out.yes_count = static_cast<std::size_t>(std::count(verdicts.begin(), verdicts.end(), true));
    out.accepted = out.yes_count >= out.threshold;
    if (out.accepted) {
        blocks_.push_back(block);
    } else {
        out.reason = std::to_string(out.yes_count) + " of " + std::to_string(verdicts.size()) +
                     " miners verified the block; " + std::to_string(out.threshold) +
                     " required";
    }
    return out;
}

const Block* Chain::find_by_hash(const Digest256& contract_hash) const noexcept {
    for (std::size_t i = 1; i < blocks_.size(); ++i) {
        if (blocks_[i].header.payload.contract_hash == contract_hash) return &blocks_[i];
    }
    return nullptr;
}

const Block* Chain::find_by_contract(std::string_view contract_id) const noexcept {
    for (std::size_t i = 1; i < blocks_.size(); ++i) {
        if (blocks_[i].header.payload.contract_id == contract_id) return &blocks_[i];
    }
    return nullptr;
}

BlockHeader Chain::next_template(BlockPayload payload, std::uint64_t timestamp,
                                 std::string miner_id) const {
    BlockHeader h;
    h.index = tip().header.index + 1;
    h.timestamp = timestamp;
    h.miner_id = std::move(miner_id);
    h.payload = std::move(payload);
    h.prev_hash = tip().hash;
    return h;
}

ChainVerdict verify_chain(const Chain& chain) {
    const auto& blocks = chain.blocks();
    const Block& genesis = blocks.front();
    const std::string& root = genesis.header.payload.owner_pubkey;
    if (!is_lower_hex(root, kKeyHexLength) || genesis != make_genesis(root)) {
        return ChainVerdict{false, 0, BlockRule::GenesisMismatch};
    }
    for (std::size_t i = 1; i < blocks.size(); ++i) {
        if (auto rule = check_block(blocks[i], blocks[i - 1], chain.difficulty())) {
            return ChainVerdict{false, i, rule};
        }
    }
    return ChainVerdict{};
}

std::vector<HistoryEntry> contract_history(const Chain& chain, std::string_view root_contract_id) {
    const auto& blocks = chain.blocks();
    std::vector<HistoryEntry> out;
    std::string current;
    for (std::size_t i = 1; i < blocks.size(); ++i) {
        const BlockPayload& p = blocks[i].header.payload;
        const bool is_root = out.empty() && p.contract_id == root_contract_id &&
                             p.parent_contract_id.empty();
        const bool is_next = !out.empty() && p.parent_contract_id == current;
        if (is_root || is_next) {
            out.push_back(HistoryEntry{p.contract_id, p.contract_hash, p.owner_pubkey,
                                       blocks[i].header.index});
            current = p.contract_id;
        }
    }
    if (out.empty()) {
        throw Error(ErrorCode::UnknownContract,
                    "no original contract '" + std::string(root_contract_id) + "' on the chain");
    }
    return out;
}

std::string lineage_root(const Chain& chain, std::string_view contract_id) {
    std::string id(contract_id);
    for (std::size_t hops = 0; hops < chain.size(); ++hops) {
        const Block* b = chain.find_by_contract(id);
        if (b == nullptr) {
            throw Error(ErrorCode::UnknownContract, "unknown contract '" + id + "'");
        }
        if (b->header.payload.parent_contract_id.empty()) return id;
        id = b->header.payload.parent_contract_id;
    }
    throw Error(ErrorCode::InvalidChain, "cyclic contract lineage");
}

}  // namespace pact
