#include "pact/core.hpp"

#include "pact/error.hpp"

#include <sodium.h>

#include <algorithm>

namespace pact {

namespace {

void ensure_sodium() {
    static const bool ready = [] { return sodium_init() >= 0; }();
    if (!ready) {
        throw Error(ErrorCode::Storage, "libsodium failed to initialise");
    }
}

int hex_value(char c) noexcept {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    return -1;
}

}  // namespace

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::InvalidArgument: return "INVALID_ARGUMENT";
        case ErrorCode::Encoding: return "ENCODING_ERROR";
        case ErrorCode::Decode: return "DECODE_ERROR";
        case ErrorCode::DuplicateSignatory: return "DUPLICATE_SIGNATORY";
        case ErrorCode::EmptyGroup: return "EMPTY_GROUP";
        case ErrorCode::UnknownGroup: return "UNKNOWN_GROUP";
        case ErrorCode::UnknownProposal: return "UNKNOWN_PROPOSAL";
        case ErrorCode::UnknownParentVersion: return "UNKNOWN_PARENT_VERSION";
        case ErrorCode::StaleParentVersion: return "STALE_PARENT_VERSION";
        case ErrorCode::ProposalInProgress: return "PROPOSAL_IN_PROGRESS";
        case ErrorCode::EmptyText: return "EMPTY_TEXT";
        case ErrorCode::NotASignatory: return "NOT_A_SIGNATORY";
        case ErrorCode::AlreadyVoted: return "ALREADY_VOTED";
        case ErrorCode::BadVoteSignature: return "BAD_VOTE_SIGNATURE";
        case ErrorCode::ProposalClosed: return "PROPOSAL_CLOSED";
        case ErrorCode::NotApproved: return "NOT_APPROVED";
        case ErrorCode::AlreadyFinalized: return "ALREADY_FINALIZED";
        case ErrorCode::UnknownContract: return "UNKNOWN_CONTRACT";
        case ErrorCode::MiningBudgetExceeded: return "MINING_BUDGET_EXCEEDED";
        case ErrorCode::QuorumRejected: return "QUORUM_REJECTED";
        case ErrorCode::Storage: return "STORAGE_ERROR";
        case ErrorCode::CorruptLog: return "CORRUPT_LOG";
        case ErrorCode::InvalidChain: return "INVALID_CHAIN";
    }
    return "UNKNOWN";
}

std::string to_hex(std::span<const std::uint8_t> bytes) {
    static constexpr char kDigits[] = "0123456789abcdef";
    std::string out;
    out.reserve(bytes.size() * 2);
    for (auto b : bytes) {
        out.push_back(kDigits[b >> 4]);
        out.push_back(kDigits[b & 0x0f]);
    }
    return out;
}

Bytes from_hex(std::string_view hex) {
    if (hex.size() % 2 != 0) {
        throw Error(ErrorCode::Decode, "hex string has odd length");
    }
    Bytes out(hex.size() / 2);
    for (std::size_t i = 0; i < out.size(); ++i) {
        const int hi = hex_value(hex[2 * i]);
        const int lo = hex_value(hex[2 * i + 1]);
        if (hi < 0 || lo < 0) {
            throw Error(ErrorCode::Decode, "invalid lowercase hex digit");
        }
        out[i] = static_cast<std::uint8_t>((hi << 4) | lo);
    }
    return out;
}

bool is_lower_hex(std::string_view s, std::size_t length) noexcept {
    return s.size() == length &&
           std::all_of(s.begin(), s.end(), [](char c) { return hex_value(c) >= 0; });
}

bool is_valid_identifier(std::string_view id) noexcept {
    if (id.empty() || id.size() > 64) return false;
    return std::all_of(id.begin(), id.end(), [](char c) {
        return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') ||
               c == '.' || c == '_' || c == '@' || c == '-';
    });
}

bool is_valid_utf8(std::string_view bytes) noexcept {
    std::size_t i = 0;
    const std::size_t n = bytes.size();
    while (i < n) {
        const auto c = static_cast<unsigned char>(bytes[i]);
        if (c < 0x80) {
            ++i;
            continue;
        }
        std::size_t extra = 0;
        std::uint32_t cp = 0;
        std::uint32_t min = 0;
        if ((c & 0xe0) == 0xc0) {
            extra = 1; cp = c & 0x1f; min = 0x80;
        } else if ((c & 0xf0) == 0xe0) {
            extra = 2; cp = c & 0x0f; min = 0x800;
        } else if ((c & 0xf8) == 0xf0) {
            extra = 3; cp = c & 0x07; min = 0x10000;
        } else {
            return false;
        }
        if (i + extra >= n) {
            return false;
        }
        for (std::size_t k = 1; k <= extra; ++k) {
            const auto cc = static_cast<unsigned char>(bytes[i + k]);
            if ((cc & 0xc0) != 0x80) return false;
            cp = (cp << 6) | (cc & 0x3f);
        }
        if (cp < min || cp > 0x10ffff || (cp >= 0xd800 && cp <= 0xdfff)) {
            return false;
        }
        i += extra + 1;
    }
    return true;
}

CanonicalText canonicalize(std::string_view raw) {
    if (!is_valid_utf8(raw)) {
        throw Error(ErrorCode::Encoding, "contract text is not valid UTF-8");
    }
    std::string out;
    out.reserve(raw.size() + 1);
    for (std::size_t i = 0; i < raw.size(); ++i) {
        if (raw[i] == '\r') {
            out.push_back('\n');
            if (i + 1 < raw.size() && raw[i + 1] == '\n') ++i;
        } else {
            out.push_back(raw[i]);
        }
    }
    if (!out.empty() && out.back() != '\n') {
        out.push_back('\n');
    }
    return CanonicalText(std::move(out));
}

Digest256::Digest256() : hex_(kDigestHexLength, '0') {}

Digest256 Digest256::from_hex(std::string_view hex) {
    if (!is_lower_hex(hex, kDigestHexLength)) {
        throw Error(ErrorCode::Decode,
                    "digest must be 64 lowercase hex characters: '" + std::string(hex) + "'");
    }
    return Digest256(std::string(hex));
}

bool Digest256::has_zero_prefix(std::size_t count) const noexcept {
    if (count > hex_.size()) return false;
    return std::all_of(hex_.begin(), hex_.begin() + static_cast<std::ptrdiff_t>(count),
                       [](char c) { return c == '0'; });
}

Digest256 sha256(std::span<const std::uint8_t> bytes) {
    ensure_sodium();
    std::array<std::uint8_t, crypto_hash_sha256_BYTES> out{};
    crypto_hash_sha256(out.data(), bytes.data(), bytes.size());
    return Digest256(to_hex(out));
}

Digest256 sha256(std::string_view bytes) {
    return sha256(std::span(reinterpret_cast<const std::uint8_t*>(bytes.data()), bytes.size()));
}

Digest256 hash_contract(const CanonicalText& text) {
    return sha256(std::string_view(text.bytes()));
}

KeyPair generate_keypair(std::optional<Seed> seed) {
    ensure_sodium();
    Seed s{};
    if (seed) {
        s = *seed;
    } else {
        randombytes_buf(s.data(), s.size());
    }
    std::array<std::uint8_t, crypto_sign_PUBLICKEYBYTES> pk{};
    std::array<std::uint8_t, crypto_sign_SECRETKEYBYTES> sk{};
    crypto_sign_seed_keypair(pk.data(), sk.data(), s.data());
    KeyPair kp;
    kp.public_key = to_hex(pk);
    kp.private_key = to_hex(s);
    sodium_memzero(sk.data(), sk.size());
    sodium_memzero(s.data(), s.size());
    return kp;
}

KeyPair keypair_from_seed(std::span<const std::uint8_t> seed) {
    if (seed.size() != Seed{}.size()) {
        throw Error(ErrorCode::InvalidArgument,
                    "keypair seed must be exactly 32 bytes, got " + std::to_string(seed.size()));
    }
    Seed s{};
    std::copy(seed.begin(), seed.end(), s.begin());
    return generate_keypair(std::optional<Seed>(s));
}

Signature Signature::from_hex(std::string_view hex) {
    if (!is_lower_hex(hex, kSignatureHexLength)) {
        throw Error(ErrorCode::Decode, "signature must be 128 lowercase hex characters");
    }
    return Signature(std::string(hex));
}

Signature sign(std::string_view private_key, std::string_view message) {
    ensure_sodium();
    if (!is_lower_hex(private_key, kKeyHexLength)) {
        throw Error(ErrorCode::Decode, "private key must be 64 lowercase hex characters");
    }
    const Bytes seed = from_hex(private_key);
    std::array<std::uint8_t, crypto_sign_PUBLICKEYBYTES> pk{};
    std::array<std::uint8_t, crypto_sign_SECRETKEYBYTES> sk{};
    crypto_sign_seed_keypair(pk.data(), sk.data(), seed.data());
    std::array<std::uint8_t, crypto_sign_BYTES> sig{};
    crypto_sign_detached(sig.data(), nullptr,
                         reinterpret_cast<const unsigned char*>(message.data()), message.size(),
                         sk.data());
    sodium_memzero(sk.data(), sk.size());
    return Signature::from_hex(to_hex(sig));
}

bool verify_signature(std::string_view public_key, std::string_view message,
                      const Signature& sig) {
    ensure_sodium();
    if (!is_lower_hex(public_key, kKeyHexLength)) {
        throw Error(ErrorCode::Decode, "public key must be 64 lowercase hex characters");
    }
    if (!is_lower_hex(sig.hex(), kSignatureHexLength)) {
        throw Error(ErrorCode::Decode, "signature must be 128 lowercase hex characters");
    }
    const Bytes pk = from_hex(public_key);
    const Bytes raw = from_hex(sig.hex());
    return crypto_sign_verify_detached(raw.data(),
                                       reinterpret_cast<const unsigned char*>(message.data()),
                                       message.size(), pk.data()) == 0;
}

Seed derive_seed(std::string_view label) {
    ensure_sodium();
    Seed out{};
    crypto_hash_sha256(out.data(), reinterpret_cast<const unsigned char*>(label.data()),
                       label.size());
    return out;
}

}  // namespace pact
