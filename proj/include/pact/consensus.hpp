#pragma once

// Consensus groups: signatories vote on one candidate text at a time, and a
// version is approved only when every signatory votes yes on the same digest.

#include "pact/core.hpp"

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace pact {

enum class ProposalKind { Original, Amendment };
enum class ProposalStatus { Open, Approved, Rejected };
enum class Tally { Pending, Approved, Rejected };

std::string_view to_string(ProposalKind kind) noexcept;
std::string_view to_string(ProposalStatus status) noexcept;
std::string_view to_string(Tally tally) noexcept;
ProposalKind parse_proposal_kind(std::string_view s);

struct Signatory {
    std::string id;
    std::string public_key;
    std::string display_name;

    friend bool operator==(const Signatory&, const Signatory&) = default;
};

struct ConsensusGroup {
    std::string id;
    std::vector<Signatory> signatories;
    std::vector<std::string> proposal_ids;

    const Signatory* find(std::string_view signatory_id) const noexcept;
};

struct Submission {
    std::string signatory_id;
    Digest256 submitted_hash;
    bool vote = false;
    Signature vote_signature;
};

struct Proposal {
    std::string id;
    std::string group_id;
    ProposalKind kind = ProposalKind::Original;
    std::string parent_version_id;
    CanonicalText text;
    Digest256 expected_hash;
    /// Snapshot of the group's signatory ids, in group order.
    std::vector<std::string> required_signatories;
    /// Recorded in arrival order.
    std::vector<Submission> submissions;
    ProposalStatus status = ProposalStatus::Open;
    /// Set once finalize has bound the proposal to a ledger version.
    std::string version_id;

    const Submission* submission_of(std::string_view signatory_id) const noexcept;
    bool finalized() const noexcept { return !version_id.empty(); }
};

/// Public half of a VeriOwner. The private key is handed to the caller of
/// finalize once and never retained here.
struct OwnerRecord {
    std::string id;
    std::string public_key;
    std::string owned_version_id;
};

struct VeriOwner {
    std::string id;
    KeyPair keypair;
    std::string owned_version_id;
};

struct ApprovedVersion {
    std::string version_id;
    std::string parent_version_id;
    std::string root_version_id;
    std::string group_id;
    std::string proposal_id;
    ProposalKind kind = ProposalKind::Original;
    Digest256 contract_hash;
    std::vector<std::string> signatory_ids;  // sorted ascending
    std::string owner_id;
    std::string owner_pubkey;
};

/// What a finalized proposal asks the ledger to record.
struct LedgerSubmission {
    std::string contract_id;
    std::string parent_contract_id;
    Digest256 contract_hash;
    std::vector<std::string> signatory_ids;
    std::string owner_pubkey;
};

struct Finalization {
    ApprovedVersion version;
    VeriOwner owner;
    LedgerSubmission submission;
};

/// The message a signatory signs when voting.
std::string vote_message(std::string_view proposal_id, const Digest256& submitted_hash, bool vote);

/// Rejected as soon as any recorded vote is "no" or any submitted digest
/// differs from the expected one; approved once every required signatory has
/// voted yes on the expected digest; pending otherwise.
Tally tally(const Proposal& proposal) noexcept;

/// Owns groups, proposals and approved versions. Not internally synchronised;
/// callers serialise mutations.
class ConsensusRegistry {
public:
    const ConsensusGroup& create_group(std::vector<Signatory> signatories,
                                       std::optional<std::string> id = std::nullopt);

    const Proposal& open_proposal(std::string_view group_id, std::string_view text,
                                  ProposalKind kind, std::string_view parent_version_id,
                                  std::optional<std::string> id = std::nullopt);

    const Proposal& cast_vote(std::string_view proposal_id, std::string_view signatory_id,
                              const Digest256& submitted_hash, bool vote,
                              const Signature& vote_signature);

    /// Builds the version, owner and ledger request without mutating state.
    Finalization prepare_finalization(std::string_view proposal_id, KeyPair owner_keypair) const;

    /// Records a finalization produced by prepare_finalization.
    void commit_finalization(const Finalization& fin);

    /// prepare_finalization followed by commit_finalization with a freshly
    /// minted owner keypair.
    Finalization finalize(std::string_view proposal_id,
                          std::optional<Seed> owner_seed = std::nullopt);

    const ConsensusGroup& group(std::string_view id) const;
    const Proposal& proposal(std::string_view id) const;
    const ApprovedVersion& version(std::string_view id) const;
    const OwnerRecord* owner_of_version(std::string_view version_id) const noexcept;

    bool has_group(std::string_view id) const noexcept;
    bool has_proposal(std::string_view id) const noexcept;
    bool has_version(std::string_view id) const noexcept;

    /// Approved versions in approval order.
    const std::vector<std::string>& version_order() const noexcept { return version_order_; }
    const std::map<std::string, ConsensusGroup, std::less<>>& groups() const noexcept { return groups_; }
    const std::map<std::string, Proposal, std::less<>>& proposals() const noexcept { return proposals_; }

    /// True when no approved version names `version_id` as its parent.
    bool is_lineage_tip(std::string_view version_id) const noexcept;

private:
    Proposal& mutable_proposal(std::string_view id);

    std::map<std::string, ConsensusGroup, std::less<>> groups_;
    std::map<std::string, Proposal, std::less<>> proposals_;
    std::map<std::string, ApprovedVersion, std::less<>> versions_;
    std::map<std::string, OwnerRecord, std::less<>> owners_by_version_;
    std::map<std::string, std::string, std::less<>> child_of_;
    std::vector<std::string> version_order_;
};

}  // namespace pact
