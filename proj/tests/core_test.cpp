#include "pact/core.hpp"
#include "pact/error.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace pact;
using pact::test::ref_ed25519_public;
using pact::test::ref_ed25519_sign;
using pact::test::ref_ed25519_verify;
using pact::test::ref_sha256_hex;

namespace {

ErrorCode code_of(auto&& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "expected pact::Error";
    return ErrorCode::InvalidArgument;
}

KeyPair seeded(std::uint8_t fill) {
    Seed s;
    s.fill(fill);
    return generate_keypair(s);
}

}  // namespace

TEST(Canonicalize, NormalizesLineEndings) {
    EXPECT_EQ(canonicalize("a\r\nb").bytes(), "a\nb\n");
    EXPECT_EQ(canonicalize("a\nb\n").bytes(), "a\nb\n");
    EXPECT_EQ(canonicalize("").bytes(), "");
    EXPECT_EQ(canonicalize("a\rb\r").bytes(), "a\nb\n");
    EXPECT_EQ(canonicalize("\r\n").bytes(), "\n");
    EXPECT_EQ(canonicalize("x\r\r\ny").bytes(), "x\n\ny\n");
}

TEST(Canonicalize, KeepsInteriorBlankLinesAndMultibyteText) {
    EXPECT_EQ(canonicalize("a\n\n\nb").bytes(), "a\n\n\nb\n");
    EXPECT_EQ(canonicalize("Vertrag \xc3\xa4\xe2\x82\xac").bytes(), "Vertrag \xc3\xa4\xe2\x82\xac\n");
}

TEST(Canonicalize, IsIdempotentAndCrFree) {
    std::mt19937_64 rng(11);
    const char alphabet[] = {'a', 'b', '\r', '\n', ' '};
    for (int i = 0; i < 2000; ++i) {
        std::string raw;
        const int len = static_cast<int>(rng() % 24);
        for (int j = 0; j < len; ++j) raw.push_back(alphabet[rng() % sizeof alphabet]);
        const CanonicalText once = canonicalize(raw);
        EXPECT_EQ(canonicalize(once.bytes()), once) << testing::PrintToString(raw);
        EXPECT_EQ(once.bytes().find('\r'), std::string::npos);
        if (!once.empty()) {
            EXPECT_EQ(once.bytes().back(), '\n');
        }
    }
}

TEST(Canonicalize, RejectsInvalidUtf8) {
    for (std::string bad : {std::string("\xff"), std::string("a\xc3"), std::string("\xc0\xaf"),
                            std::string("\xed\xa0\x80"), std::string("\xf4\x90\x80\x80")}) {
        EXPECT_EQ(code_of([&] { canonicalize(bad); }), ErrorCode::Encoding)
            << testing::PrintToString(bad);
    }
}

TEST(Sha256, KnownVectorsAgreeWithReference) {
    const std::string empty = "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855";
    const std::string abc = "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad";
    EXPECT_EQ(ref_sha256_hex(""), empty);
    EXPECT_EQ(ref_sha256_hex("abc"), abc);
    EXPECT_EQ(hash_contract(canonicalize("")).hex(), empty);
    EXPECT_EQ(sha256(std::string_view("abc")).hex(), abc);
    EXPECT_EQ(hash_contract(canonicalize("abc")).hex(), ref_sha256_hex("abc\n"));
}

TEST(Sha256, MatchesReferenceOnRandomInputs) {
    std::mt19937_64 rng(3);
    for (std::size_t len = 0; len < 300; ++len) {
        std::string data(len, '\0');
        for (auto& c : data) c = static_cast<char>(rng());
        EXPECT_EQ(sha256(std::string_view(data)).hex(), ref_sha256_hex(data));
    }
}

TEST(Sha256, SingleBitFlipsAlwaysChangeTheDigest) {
    std::mt19937_64 rng(29);
    for (int i = 0; i < 1500; ++i) {
        std::string text(1 + rng() % 200, '\0');
        for (auto& c : text) c = static_cast<char>(rng());
        std::string mutated = text;
        mutated[rng() % text.size()] ^= static_cast<char>(1 << (rng() % 8));
        EXPECT_NE(sha256(std::string_view(mutated)), sha256(std::string_view(text)));
    }
}

TEST(Digest, FromHexIsStrict) {
    EXPECT_EQ(Digest256().hex(), std::string(64, '0'));
    EXPECT_EQ(code_of([] { Digest256::from_hex(std::string(63, 'a')); }), ErrorCode::Decode);
    EXPECT_EQ(code_of([] { Digest256::from_hex(std::string(64, 'A')); }), ErrorCode::Decode);
    EXPECT_EQ(code_of([] { Digest256::from_hex(std::string(64, 'g')); }), ErrorCode::Decode);
    EXPECT_TRUE(Digest256::from_hex("00a" + std::string(61, '1')).has_zero_prefix(2));
    EXPECT_FALSE(Digest256::from_hex("00a" + std::string(61, '1')).has_zero_prefix(3));
}

TEST(Hex, RoundTripAndRejectsUppercase) {
    const Bytes b{0x00, 0x7f, 0x80, 0xff};
    EXPECT_EQ(to_hex(b), "007f80ff");
    EXPECT_EQ(from_hex("007f80ff"), b);
    EXPECT_EQ(code_of([] { from_hex("0F"); }), ErrorCode::Decode);
    EXPECT_EQ(code_of([] { from_hex("abc"); }), ErrorCode::Decode);
}

TEST(Identifier, Charset) {
    EXPECT_TRUE(is_valid_identifier("alice"));
    EXPECT_TRUE(is_valid_identifier("a.b-c_d@x"));
    EXPECT_FALSE(is_valid_identifier(""));
    EXPECT_FALSE(is_valid_identifier("a,b"));
    EXPECT_FALSE(is_valid_identifier("a\nb"));
    EXPECT_FALSE(is_valid_identifier(std::string(65, 'a')));
}

TEST(Keys, SeededGenerationIsDeterministicAndInjective) {
    EXPECT_EQ(seeded(1), seeded(1));
    EXPECT_NE(seeded(1).public_key, seeded(2).public_key);
    EXPECT_EQ(seeded(1).scheme_id, "ed25519");
    EXPECT_TRUE(is_lower_hex(seeded(1).public_key, kKeyHexLength));
    EXPECT_TRUE(is_lower_hex(seeded(1).private_key, kKeyHexLength));
}

TEST(Keys, UnseededKeysAreFreshAndSelfVerify) {
    const KeyPair a = generate_keypair();
    const KeyPair b = generate_keypair();
    EXPECT_NE(a.public_key, b.public_key);
    EXPECT_TRUE(verify_signature(a.public_key, "probe", sign(a.private_key, "probe")));
}

TEST(Keys, PublicKeyMatchesReferenceDerivation) {
    for (std::uint8_t i = 0; i < 20; ++i) {
        const KeyPair k = seeded(i);
        EXPECT_EQ(k.public_key, ref_ed25519_public(k.private_key));
    }
}

TEST(Keys, SeedLengthIsChecked) {
    const Bytes short_seed(31, 1);
    EXPECT_EQ(code_of([&] { keypair_from_seed(short_seed); }), ErrorCode::InvalidArgument);
    const Bytes ok(32, 1);
    EXPECT_EQ(keypair_from_seed(ok), seeded(1));
}

TEST(Signature, Rfc8032FirstVector) {
    const std::string seed = "9d61b19deffd5a60ba844af492ec2cc44449c5697b326919703bac031cae7f60";
    const std::string pub = "d75a980182b10ab7d54bfed3c964073a0ee172f3daa62325af021a68f707511a";
    const std::string sig =
        "e5564300c360ac729086e2cc806e828a84877f1eb8e5d974d873e065224901555fb8821590a33bac"
        "c61e39701cf9b46bd25bf5f0595bbe24655141438e7a100b";
    EXPECT_EQ(keypair_from_seed(from_hex(seed)).public_key, pub);
    EXPECT_EQ(sign(seed, "").hex(), sig);
    EXPECT_TRUE(verify_signature(pub, "", Signature::from_hex(sig)));
}

TEST(Signature, RoundTripAndMutations) {
    const KeyPair k = seeded(7);
    const KeyPair k2 = seeded(8);
    const Signature s = sign(k.private_key, "hello");
    EXPECT_TRUE(verify_signature(k.public_key, "hello", s));
    EXPECT_FALSE(verify_signature(k.public_key, "hellO", s));
    EXPECT_FALSE(verify_signature(k2.public_key, "hello", s));
    EXPECT_EQ(sign(k.private_key, "hello"), s);
    EXPECT_EQ(s.hex().size(), kSignatureHexLength);

    std::string flipped = s.hex();
    flipped[10] = flipped[10] == '0' ? '1' : '0';
    EXPECT_FALSE(verify_signature(k.public_key, "hello", Signature::from_hex(flipped)));
}

TEST(Signature, AgreesWithReferenceUpTo64KiB) {
    std::mt19937_64 rng(5);
    const KeyPair k = seeded(9);
    for (std::size_t len : {0u, 1u, 63u, 64u, 1000u, 4096u, 65535u, 65536u}) {
        std::string msg(len, '\0');
        for (auto& c : msg) c = static_cast<char>(rng());
        const Signature s = sign(k.private_key, msg);
        EXPECT_EQ(s.hex(), ref_ed25519_sign(k.private_key, msg)) << len;
        EXPECT_TRUE(ref_ed25519_verify(k.public_key, msg, s.hex())) << len;
        EXPECT_TRUE(verify_signature(k.public_key, msg, s)) << len;
        if (len > 0) {
            msg[rng() % len] ^= 1;
            EXPECT_FALSE(verify_signature(k.public_key, msg, s)) << len;
        }
    }
}

TEST(Signature, RandomMessagesProperty) {
    std::mt19937_64 rng(17);
    for (int i = 0; i < 300; ++i) {
        const KeyPair k = seeded(static_cast<std::uint8_t>(rng()));
        std::string msg(rng() % 512, '\0');
        for (auto& c : msg) c = static_cast<char>(rng());
        EXPECT_TRUE(verify_signature(k.public_key, msg, sign(k.private_key, msg)));
    }
}

TEST(Signature, MalformedEncodingsAreDecodeErrors) {
    const KeyPair k = seeded(3);
    EXPECT_EQ(code_of([] { Signature::from_hex("abcd"); }), ErrorCode::Decode);
    EXPECT_EQ(code_of([] { sign("nothex", "m"); }), ErrorCode::Decode);
    const Signature s = sign(k.private_key, "m");
    EXPECT_EQ(code_of([&] { verify_signature("12", "m", s); }), ErrorCode::Decode);
}

TEST(Errors, StableCodes) {
    EXPECT_EQ(to_string(ErrorCode::NotASignatory), "NOT_A_SIGNATORY");
    EXPECT_EQ(to_string(ErrorCode::AlreadyVoted), "ALREADY_VOTED");
    EXPECT_EQ(to_string(ErrorCode::UnknownParentVersion), "UNKNOWN_PARENT_VERSION");
}
