#pragma once

// Shared test helpers: scratch directories, a reference crypto
// implementation independent of the library, a chain builder and a runner
// for the real `pact` binary.

#include "pact/consensus.hpp"
#include "pact/core.hpp"
#include "pact/ledger.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace pact::test {

class TempDir {
public:
    TempDir();
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const noexcept { return path_; }
    std::filesystem::path operator/(std::string_view name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

std::string read_file(const std::filesystem::path& p);
void write_file(const std::filesystem::path& p, std::string_view contents);
std::filesystem::path fixture(std::string_view name);

// Reference implementations backed by OpenSSL.
std::string ref_sha256_hex(std::string_view data);
std::string ref_ed25519_public(std::string_view seed_hex);
std::string ref_ed25519_sign(std::string_view seed_hex, std::string_view message);
bool ref_ed25519_verify(std::string_view pub_hex, std::string_view message, std::string_view sig_hex);

/// Smallest T with T/M >= 51/100, found by counting up.
std::size_t brute_quorum(std::size_t miners);

/// Builds real chains block by block: mines, signs with the previous owner's
/// key and appends with unanimous verdicts.
class ChainBuilder {
public:
    explicit ChainBuilder(std::size_t difficulty, std::uint64_t seed = 1);

    /// Appends a version; `parent` is empty for an original. Returns the new
    /// block's contract id.
    std::string add(std::string_view text, std::string_view parent = {},
                    std::vector<std::string> signatories = {"alice", "bob", "carol"});

    /// Header for the next block, signed by the tip owner but not mined.
    BlockHeader next_header(std::string_view text, std::string_view parent,
                            const KeyPair& new_owner, std::vector<std::string> signatories);

    Chain& chain() noexcept { return chain_; }
    /// keys()[i] owns blocks()[i]; keys()[0] is the root owner.
    const std::vector<KeyPair>& keys() const noexcept { return keys_; }

private:
    KeyPair next_key();

    std::uint64_t seed_;
    std::uint64_t minted_ = 0;
    std::vector<KeyPair> keys_;
    Chain chain_;
};

/// A signatory together with the key it votes with.
struct Signer {
    std::string id;
    KeyPair keys;

    Signatory signatory() const { return {id, keys.public_key, id}; }
    Signature vote(std::string_view proposal_id, const Digest256& hash, bool yes) const {
        return sign(keys.private_key, vote_message(proposal_id, hash, yes));
    }
};

Signer signer(const std::string& id);
std::vector<Signatory> signatories(const std::vector<Signer>& signers);

struct ProcessResult {
    int exit_code = -1;
    std::string out;
};

/// Runs the built `pact` binary with `args` (shell-quoted here) and
/// captures stdout.
ProcessResult run_pact(const std::vector<std::string>& args);

}  // namespace pact::test
