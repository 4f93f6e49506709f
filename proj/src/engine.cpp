#include "pact/engine.hpp"

#include "pact/error.hpp"

#include <chrono>
#include <mutex>
#include <random>

namespace pact {

Clock system_clock() {
    return [] {
        return static_cast<std::uint64_t>(
            std::chrono::duration_cast<std::chrono::seconds>(
                std::chrono::system_clock::now().time_since_epoch())
                .count());
    };
}

Clock fixed_clock(std::uint64_t t) {
    return [t] { return t; };
}

namespace {

LoadedState open_state(const EngineOptions& opts) {
    LoadOptions lo;
    lo.config = opts.config;
    lo.seed = opts.seed;
    return load_state(StorePaths{opts.data_dir}, lo);
}

std::uint64_t pick_seed(const std::optional<std::uint64_t>& seed) {
    if (seed) return *seed;
    std::random_device rd;
    return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

}  // namespace

Engine::Engine(EngineOptions opts)
    : opts_(std::move(opts)),
      config_(),
      registry_(),
      chain_(std::string(kKeyHexLength, '0'), 0),
      store_(StorePaths{opts_.data_dir}, opts_.fsync, 0),
      rng_seed_(pick_seed(opts_.seed)) {
    LoadedState state = open_state(opts_);
    config_ = state.config;
    registry_ = std::move(state.registry);
    chain_ = std::move(state.chain);
    store_ = Store(StorePaths{opts_.data_dir}, opts_.fsync, state.last_seq);

    SimConfig roster;
    roster.miner_count = std::max<std::size_t>(1, config_.miners);
    roster.noise_p = config_.miner_noise;
    miners_ = build_miners(roster);
}

StoreConfig Engine::config() const {
    std::shared_lock lock(mutex_);
    return config_;
}

ConsensusGroup Engine::create_group(std::vector<Signatory> signatories) {
    std::unique_lock lock(mutex_);
    const ConsensusGroup& g = registry_.create_group(std::move(signatories));
    store_.append_event(EventKind::GroupCreated, group_created_body(g), opts_.clock());
    return g;
}

Proposal Engine::open_proposal(std::string_view group_id, std::string_view text,
                               ProposalKind kind, std::string_view parent_version_id) {
    std::unique_lock lock(mutex_);
    const Proposal& p = registry_.open_proposal(group_id, text, kind, parent_version_id);
    store_.put_text(p.text);
    store_.append_event(EventKind::ProposalOpened, proposal_opened_body(p), opts_.clock());
    return p;
}

Proposal Engine::cast_vote(std::string_view proposal_id, std::string_view signatory_id,
                           const Digest256& submitted_hash, bool vote,
                           const Signature& signature) {
    std::unique_lock lock(mutex_);
    const Proposal& p =
        registry_.cast_vote(proposal_id, signatory_id, submitted_hash, vote, signature);
    store_.append_event(EventKind::VoteCast, vote_cast_body(p.id, p.submissions.back()),
                        opts_.clock());
    return p;
}

KeyPair Engine::owner_keypair_for(std::string_view proposal_id, unsigned attempt) const {
    if (!opts_.seed) return generate_keypair();
    return generate_keypair(derive_seed("OWNER\n" + std::to_string(*opts_.seed) + "\n" +
                                        std::string(proposal_id) + "\n" +
                                        std::to_string(attempt)));
}

FinalizeResult Engine::finalize(std::string_view proposal_id) {
    std::unique_lock lock(mutex_);
    Finalization fin = registry_.prepare_finalization(
        proposal_id, owner_keypair_for(proposal_id, finalize_attempts_++));

    const Block& tip = chain_.tip();
    std::string prev_owner_id(kRootOwnerId);
    if (tip.header.index > 0) {
        const OwnerRecord* rec = registry_.owner_of_version(tip.header.payload.contract_id);
        if (rec == nullptr) {
            throw Error(ErrorCode::InvalidChain, "tip block has no known owner");
        }
        prev_owner_id = rec->id;
    }
    const std::optional<std::string> prev_key = store_.vault().get(prev_owner_id);
    if (!prev_key) {
        throw Error(ErrorCode::Storage, "vault has no key for owner '" + prev_owner_id + "'");
    }

    const LedgerSubmission& sub = fin.submission;
    BlockPayload payload;
    payload.contract_id = sub.contract_id;
    payload.parent_contract_id = sub.parent_contract_id;
    payload.contract_hash = sub.contract_hash;
    payload.signatory_ids = sub.signatory_ids;
    payload.owner_pubkey = sub.owner_pubkey;
    payload.prev_owner_sig =
        sign(*prev_key, ownership_message(sub.contract_hash, sub.owner_pubkey, tip.hash)).hex();

    const std::string& miner = miners_[tip.header.index % miners_.size()].id;
    BlockHeader tmpl = chain_.next_template(std::move(payload), opts_.clock(), miner);
    MineOptions mo;
    mo.workers = opts_.mining_workers;
    const Block block = mine(tmpl, chain_.difficulty(), mo).block;

    const bool valid = verify_block(block, tip, chain_.difficulty());
    SimRng rng(rng_seed_, block.header.index);
    std::vector<bool> verdicts;
    for (const auto& m : miners_) verdicts.push_back(miner_verdict(m, valid, rng.uniform()));

    const AppendOutcome outcome = chain_.append_block(block, verdicts);
    if (!outcome.accepted) {
        throw Error(ErrorCode::QuorumRejected, "block rejected: " + outcome.reason);
    }

    store_.vault().put(fin.owner.id, fin.owner.keypair.private_key);
    store_.append_block(block);
    registry_.commit_finalization(fin);
    const std::uint64_t now = opts_.clock();
    store_.append_event(EventKind::ProposalFinalized, proposal_finalized_body(fin.version), now);
    store_.append_event(EventKind::BlockAccepted, block_accepted_body(block, outcome), now);

    return FinalizeResult{fin.version,
                          OwnerRecord{fin.owner.id, fin.owner.keypair.public_key,
                                      fin.version.version_id},
                          block, outcome};
}

ConsensusGroup Engine::group(std::string_view id) const {
    std::shared_lock lock(mutex_);
    return registry_.group(id);
}

Proposal Engine::proposal(std::string_view id) const {
    std::shared_lock lock(mutex_);
    return registry_.proposal(id);
}

std::vector<Block> Engine::chain_blocks() const {
    std::shared_lock lock(mutex_);
    return chain_.blocks();
}

ChainVerdict Engine::verify() const {
    std::shared_lock lock(mutex_);
    return verify_chain(chain_);
}

std::vector<HistoryEntry> Engine::history(std::string_view root_contract_id) const {
    std::shared_lock lock(mutex_);
    return contract_history(chain_, root_contract_id);
}

Attestation Engine::verify_document(std::string_view text) const {
    const Digest256 digest = hash_contract(canonicalize(text));
    std::shared_lock lock(mutex_);
    Attestation a;
    a.digest = digest;
    if (const Block* b = chain_.find_by_hash(digest)) {
        a.found = true;
        a.block_index = b->header.index;
        a.version_id = b->header.payload.contract_id;
        a.lineage_root = lineage_root(chain_, a.version_id);
        a.owner_pubkey = b->header.payload.owner_pubkey;
    }
    return a;
}

SimReport Engine::run_sim(const SimConfig& config) const {
    return run_simulation(config);
}

}  // namespace pact
