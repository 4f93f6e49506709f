#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace pact {

/// Every failure the library reports carries one of these codes. The string
/// form (see to_string) is part of the HTTP and CLI contract and must not change.
enum class ErrorCode {
    InvalidArgument,
    Encoding,
    Decode,
    // consensus
    DuplicateSignatory,
    EmptyGroup,
    UnknownGroup,
    UnknownProposal,
    UnknownParentVersion,
    StaleParentVersion,
    ProposalInProgress,
    EmptyText,
    NotASignatory,
    AlreadyVoted,
    BadVoteSignature,
    ProposalClosed,
    NotApproved,
    AlreadyFinalized,
    // ledger
    UnknownContract,
    MiningBudgetExceeded,
    QuorumRejected,
    // store
    Storage,
    CorruptLog,
    InvalidChain,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

}  // namespace pact
