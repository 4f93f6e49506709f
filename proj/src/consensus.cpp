#include "pact/consensus.hpp"

#include "pact/error.hpp"

#include <algorithm>
#include <set>

namespace pact {

std::string_view to_string(ProposalKind kind) noexcept {
    return kind == ProposalKind::Original ? "original" : "amendment";
}

std::string_view to_string(ProposalStatus status) noexcept {
    switch (status) {
        case ProposalStatus::Open: return "open";
        case ProposalStatus::Approved: return "approved";
        case ProposalStatus::Rejected: return "rejected";
    }
    return "open";
}

std::string_view to_string(Tally t) noexcept {
    switch (t) {
        case Tally::Pending: return "pending";
        case Tally::Approved: return "approved";
        case Tally::Rejected: return "rejected";
    }
    return "pending";
}

ProposalKind parse_proposal_kind(std::string_view s) {
    if (s == "original") return ProposalKind::Original;
    if (s == "amendment") return ProposalKind::Amendment;
    throw Error(ErrorCode::InvalidArgument, "proposal kind must be 'original' or 'amendment'");
}

const Signatory* ConsensusGroup::find(std::string_view signatory_id) const noexcept {
    for (const auto& s : signatories) {
        if (s.id == signatory_id) return &s;
    }
    return nullptr;
}

const Submission* Proposal::submission_of(std::string_view signatory_id) const noexcept {
    for (const auto& s : submissions) {
        if (s.signatory_id == signatory_id) return &s;
    }
    return nullptr;
}

std::string vote_message(std::string_view proposal_id, const Digest256& submitted_hash, bool vote) {
    std::string msg = "VOTE\n";
    msg += proposal_id;
    msg += '\n';
    msg += submitted_hash.hex();
    msg += '\n';
    msg += vote ? '1' : '0';
    return msg;
}

Tally tally(const Proposal& proposal) noexcept {
    for (const auto& s : proposal.submissions) {
        if (!s.vote || s.submitted_hash != proposal.expected_hash) {
            return Tally::Rejected;
        }
    }
    for (const auto& id : proposal.required_signatories) {
        if (proposal.submission_of(id) == nullptr) return Tally::Pending;
    }
    return Tally::Approved;
}

const ConsensusGroup& ConsensusRegistry::create_group(std::vector<Signatory> signatories,
                                                      std::optional<std::string> id) {
    if (signatories.empty()) {
        throw Error(ErrorCode::EmptyGroup, "a consensus group needs at least one signatory");
    }
    std::set<std::string, std::less<>> seen;
    for (auto& s : signatories) {
        if (!is_valid_identifier(s.id)) {
            throw Error(ErrorCode::InvalidArgument, "invalid signatory id '" + s.id + "'");
        }
        if (!is_lower_hex(s.public_key, kKeyHexLength)) {
            throw Error(ErrorCode::Decode, "signatory '" + s.id + "' has a malformed public key");
        }
        if (!seen.insert(s.id).second) {
            throw Error(ErrorCode::DuplicateSignatory, "duplicate signatory '" + s.id + "'");
        }
        if (s.display_name.empty()) s.display_name = s.id;
    }
    std::string gid = id ? *id : "grp-" + std::to_string(groups_.size() + 1);
    if (!is_valid_identifier(gid) || groups_.contains(gid)) {
        throw Error(ErrorCode::InvalidArgument, "group id '" + gid + "' is invalid or taken");
    }
    ConsensusGroup g{gid, std::move(signatories), {}};
    return groups_.emplace(gid, std::move(g)).first->second;
}

const Proposal& ConsensusRegistry::open_proposal(std::string_view group_id, std::string_view text,
                                                 ProposalKind kind,
                                                 std::string_view parent_version_id,
                                                 std::optional<std::string> id) {
    auto git = groups_.find(group_id);
    if (git == groups_.end()) {
        throw Error(ErrorCode::UnknownGroup, "unknown group '" + std::string(group_id) + "'");
    }
    ConsensusGroup& g = git->second;

    for (const auto& pid : g.proposal_ids) {
        const Proposal& other = proposals_.at(pid);
        const bool live = other.status == ProposalStatus::Open ||
                          (other.status == ProposalStatus::Approved && !other.finalized());
        if (live) {
            throw Error(ErrorCode::ProposalInProgress,
                        "proposal '" + pid + "' is still in progress in group '" + g.id + "'");
        }
    }

    CanonicalText canonical = canonicalize(text);
    if (kind == ProposalKind::Original) {
        if (!parent_version_id.empty()) {
            throw Error(ErrorCode::InvalidArgument, "an original contract cannot have a parent");
        }
        if (canonical.empty()) {
            throw Error(ErrorCode::EmptyText, "an original contract needs non-empty text");
        }
    } else {
        auto vit = versions_.find(parent_version_id);
        if (vit == versions_.end() || vit->second.group_id != g.id) {
            throw Error(ErrorCode::UnknownParentVersion,
                        "no approved version '" + std::string(parent_version_id) +
                            "' in group '" + g.id + "'");
        }
        if (!is_lineage_tip(parent_version_id)) {
            throw Error(ErrorCode::StaleParentVersion,
                        "version '" + std::string(parent_version_id) +
                            "' already has an amendment; amend the newest version");
        }
    }

    std::string pid = id ? *id : "prop-" + std::to_string(proposals_.size() + 1);
    if (!is_valid_identifier(pid) || proposals_.contains(pid)) {
        throw Error(ErrorCode::InvalidArgument, "proposal id '" + pid + "' is invalid or taken");
    }

    Proposal p;
    p.id = pid;
    p.group_id = g.id;
    p.kind = kind;
    p.parent_version_id = std::string(parent_version_id);
    p.expected_hash = hash_contract(canonical);
    p.text = std::move(canonical);
    for (const auto& s : g.signatories) p.required_signatories.push_back(s.id);

    g.proposal_ids.push_back(pid);
    return proposals_.emplace(pid, std::move(p)).first->second;
}

const Proposal& ConsensusRegistry::cast_vote(std::string_view proposal_id,
                                             std::string_view signatory_id,
                                             const Digest256& submitted_hash, bool vote,
                                             const Signature& vote_signature) {
    Proposal& p = mutable_proposal(proposal_id);
    const Signatory* signer = groups_.at(p.group_id).find(signatory_id);
    if (signer == nullptr) {
        throw Error(ErrorCode::NotASignatory, "'" + std::string(signatory_id) +
                                                  "' is not a signatory of group '" +
                                                  p.group_id + "'");
    }
    if (p.submission_of(signatory_id) != nullptr) {
        throw Error(ErrorCode::AlreadyVoted,
                    "'" + std::string(signatory_id) + "' already voted on '" + p.id + "'");
    }
    if (p.status != ProposalStatus::Open) {
        throw Error(ErrorCode::ProposalClosed,
                    "proposal '" + p.id + "' is " + std::string(to_string(p.status)));
    }
    bool authentic = false;
    try {
        authentic = verify_signature(signer->public_key,
                                     vote_message(p.id, submitted_hash, vote), vote_signature);
    } catch (const Error&) {
        authentic = false;
    }
    if (!authentic) {
        throw Error(ErrorCode::BadVoteSignature,
                    "vote signature does not verify under the key of '" + signer->id + "'");
    }

    p.submissions.push_back(Submission{signer->id, submitted_hash, vote, vote_signature});
    switch (tally(p)) {
        case Tally::Rejected: p.status = ProposalStatus::Rejected; break;
        case Tally::Approved: p.status = ProposalStatus::Approved; break;
        case Tally::Pending: break;
    }
    return p;
}

Finalization ConsensusRegistry::prepare_finalization(std::string_view proposal_id,
                                                     KeyPair owner_keypair) const {
    const Proposal& p = proposal(proposal_id);
    if (p.finalized()) {
        throw Error(ErrorCode::AlreadyFinalized, "proposal '" + p.id + "' is already finalized");
    }
    if (tally(p) != Tally::Approved) {
        throw Error(ErrorCode::NotApproved, "proposal '" + p.id + "' is " +
                                                std::string(to_string(tally(p))) +
                                                ", not approved");
    }

    Finalization fin;
    ApprovedVersion& v = fin.version;
    v.version_id = sha256("VERSION\n" + p.id + "\n" + p.expected_hash.hex()).hex().substr(0, 32);
    v.parent_version_id = p.parent_version_id;
    v.root_version_id = p.parent_version_id.empty()
                            ? v.version_id
                            : version(p.parent_version_id).root_version_id;
    v.group_id = p.group_id;
    v.proposal_id = p.id;
    v.kind = p.kind;
    v.contract_hash = p.expected_hash;
    v.signatory_ids = p.required_signatories;
    std::sort(v.signatory_ids.begin(), v.signatory_ids.end());
    v.owner_id = "owner-" + v.version_id;
    v.owner_pubkey = owner_keypair.public_key;

    fin.owner = VeriOwner{v.owner_id, std::move(owner_keypair), v.version_id};
    fin.submission = LedgerSubmission{v.version_id, v.parent_version_id, v.contract_hash,
                                      v.signatory_ids, v.owner_pubkey};
    return fin;
}

void ConsensusRegistry::commit_finalization(const Finalization& fin) {
    const ApprovedVersion& v = fin.version;
    Proposal& p = mutable_proposal(v.proposal_id);
    if (p.finalized()) {
        throw Error(ErrorCode::AlreadyFinalized, "proposal '" + p.id + "' is already finalized");
    }
    if (tally(p) != Tally::Approved) {
        throw Error(ErrorCode::NotApproved, "proposal '" + p.id + "' is not approved");
    }
    if (versions_.contains(v.version_id)) {
        throw Error(ErrorCode::InvalidArgument, "version '" + v.version_id + "' already exists");
    }
    for (const auto& [_, owner] : owners_by_version_) {
        if (owner.public_key == v.owner_pubkey) {
            throw Error(ErrorCode::InvalidArgument, "owner key reused across versions");
        }
    }
    if (!v.parent_version_id.empty()) {
        if (!is_lineage_tip(v.parent_version_id)) {
            throw Error(ErrorCode::StaleParentVersion,
                        "version '" + v.parent_version_id + "' already has an amendment");
        }
        child_of_[v.parent_version_id] = v.version_id;
    }
    p.status = ProposalStatus::Approved;
    p.version_id = v.version_id;
    versions_.emplace(v.version_id, v);
    owners_by_version_.emplace(v.version_id,
                               OwnerRecord{v.owner_id, v.owner_pubkey, v.version_id});
    version_order_.push_back(v.version_id);
}

Finalization ConsensusRegistry::finalize(std::string_view proposal_id,
                                         std::optional<Seed> owner_seed) {
    Finalization fin = prepare_finalization(proposal_id, generate_keypair(owner_seed));
    commit_finalization(fin);
    return fin;
}

const ConsensusGroup& ConsensusRegistry::group(std::string_view id) const {
    auto it = groups_.find(id);
    if (it == groups_.end()) {
        throw Error(ErrorCode::UnknownGroup, "unknown group '" + std::string(id) + "'");
    }
    return it->second;
}

const Proposal& ConsensusRegistry::proposal(std::string_view id) const {
    auto it = proposals_.find(id);
    if (it == proposals_.end()) {
        throw Error(ErrorCode::UnknownProposal, "unknown proposal '" + std::string(id) + "'");
    }
    return it->second;
}

Proposal& ConsensusRegistry::mutable_proposal(std::string_view id) {
    auto it = proposals_.find(id);
    if (it == proposals_.end()) {
        throw Error(ErrorCode::UnknownProposal, "unknown proposal '" + std::string(id) + "'");
    }
    return it->second;
}

const ApprovedVersion& ConsensusRegistry::version(std::string_view id) const {
    auto it = versions_.find(id);
    if (it == versions_.end()) {
        throw Error(ErrorCode::UnknownContract, "unknown contract version '" + std::string(id) + "'");
    }
    return it->second;
}

const OwnerRecord* ConsensusRegistry::owner_of_version(std::string_view version_id) const noexcept {
    auto it = owners_by_version_.find(version_id);
    return it == owners_by_version_.end() ? nullptr : &it->second;
}

bool ConsensusRegistry::has_group(std::string_view id) const noexcept { return groups_.contains(id); }
bool ConsensusRegistry::has_proposal(std::string_view id) const noexcept { return proposals_.contains(id); }
bool ConsensusRegistry::has_version(std::string_view id) const noexcept { return versions_.contains(id); }

bool ConsensusRegistry::is_lineage_tip(std::string_view version_id) const noexcept {
    return !child_of_.contains(version_id);
}

}  // namespace pact
