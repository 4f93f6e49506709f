#pragma once

// Text canonicalization, SHA-256 digests and Ed25519 signatures.
// Everything here is a pure function and safe to call from any thread.

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pact {

using Bytes = std::vector<std::uint8_t>;

inline constexpr std::string_view kSignatureScheme = "ed25519";
inline constexpr std::size_t kDigestHexLength = 64;
inline constexpr std::size_t kKeyHexLength = 64;
inline constexpr std::size_t kSignatureHexLength = 128;

/// Lowercase hex encoding.
std::string to_hex(std::span<const std::uint8_t> bytes);

/// Strict lowercase hex decoding. Uppercase digits are rejected, not folded.
/// Throws Error(Decode).
Bytes from_hex(std::string_view hex);

/// True when `s` is exactly `length` characters of [0-9a-f].
bool is_lower_hex(std::string_view s, std::size_t length) noexcept;

/// Ids are 1-64 characters of [A-Za-z0-9._@-]. They are joined with ',' in
/// block preimages, so separators must never appear inside one.
bool is_valid_identifier(std::string_view id) noexcept;

/// True when `bytes` is well-formed UTF-8 (no overlongs, surrogates or
/// code points above U+10FFFF).
bool is_valid_utf8(std::string_view bytes) noexcept;

/// UTF-8 text with LF line endings. Non-empty texts end with exactly one
/// trailing LF; the empty text stays empty.
class CanonicalText {
public:
    CanonicalText() = default;

    const std::string& bytes() const noexcept { return bytes_; }
    bool empty() const noexcept { return bytes_.empty(); }

    friend bool operator==(const CanonicalText&, const CanonicalText&) = default;

private:
    explicit CanonicalText(std::string bytes) : bytes_(std::move(bytes)) {}
    friend CanonicalText canonicalize(std::string_view raw);

    std::string bytes_;
};

/// CRLF and lone CR become LF, and a missing final LF is appended.
/// Throws Error(Encoding) on invalid UTF-8.
CanonicalText canonicalize(std::string_view raw);

/// A SHA-256 value held as 64 lowercase hex characters.
class Digest256 {
public:
    /// The all-zero digest.
    Digest256();

    /// Throws Error(Decode) unless `hex` is 64 lowercase hex characters.
    static Digest256 from_hex(std::string_view hex);

    const std::string& hex() const noexcept { return hex_; }

    /// True when the hex form starts with `count` '0' characters.
    bool has_zero_prefix(std::size_t count) const noexcept;

    friend auto operator<=>(const Digest256&, const Digest256&) = default;

private:
    explicit Digest256(std::string hex) : hex_(std::move(hex)) {}
    friend Digest256 sha256(std::span<const std::uint8_t> bytes);

    std::string hex_;
};

Digest256 sha256(std::span<const std::uint8_t> bytes);
Digest256 sha256(std::string_view bytes);

/// Digest of a contract text. Identical canonical bytes always hash equal.
Digest256 hash_contract(const CanonicalText& text);

/// Hex-encoded Ed25519 keypair. `private_key` is the 32-byte seed the
/// signing key is expanded from.
struct KeyPair {
    std::string public_key;
    std::string private_key;
    std::string scheme_id{kSignatureScheme};

    friend bool operator==(const KeyPair&, const KeyPair&) = default;
};

using Seed = std::array<std::uint8_t, 32>;

/// With a seed the keypair is a pure function of it; without one, fresh
/// entropy is drawn from the OS.
KeyPair generate_keypair(std::optional<Seed> seed = std::nullopt);

/// Seeded generation from untyped bytes. Throws Error(InvalidArgument)
/// unless `seed` is exactly 32 bytes.
KeyPair keypair_from_seed(std::span<const std::uint8_t> seed);

/// Detached Ed25519 signature, 128 lowercase hex characters.
class Signature {
public:
    Signature() = default;

    /// Throws Error(Decode) on a malformed encoding.
    static Signature from_hex(std::string_view hex);

    const std::string& hex() const noexcept { return hex_; }

    friend bool operator==(const Signature&, const Signature&) = default;

private:
    explicit Signature(std::string hex) : hex_(std::move(hex)) {}

    std::string hex_;
};

/// Throws Error(Decode) if `private_key` is not 64 lowercase hex characters.
Signature sign(std::string_view private_key, std::string_view message);

/// False for a well-formed but non-matching signature. Throws Error(Decode)
/// when the public key encoding is malformed.
bool verify_signature(std::string_view public_key, std::string_view message,
                      const Signature& sig);

/// Deterministic 32-byte seed derived from a label, for reproducible runs.
Seed derive_seed(std::string_view label);

}  // namespace pact
