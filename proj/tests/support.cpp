#include "support.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <memory>
#include <random>
#include <sstream>
#include <stdexcept>
#include <sys/wait.h>

namespace pact::test {

namespace fs = std::filesystem;

TempDir::TempDir() {
    std::string tmpl = (fs::temp_directory_path() / "pact-test-XXXXXX").string();
    if (!::mkdtemp(tmpl.data())) throw std::runtime_error("mkdtemp failed");
    path_ = tmpl;
}

TempDir::~TempDir() {
    std::error_code ec;
    fs::remove_all(path_, ec);
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const fs::path& p, std::string_view contents) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw std::runtime_error("cannot write " + p.string());
}

fs::path fixture(std::string_view name) { return fs::path(PACT_FIXTURE_DIR) / name; }

namespace {

std::string hex(const unsigned char* p, std::size_t n) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string s;
    for (std::size_t i = 0; i < n; ++i) {
        s.push_back(digits[p[i] >> 4]);
        s.push_back(digits[p[i] & 15]);
    }
    return s;
}

std::vector<unsigned char> unhex(std::string_view h) {
    std::vector<unsigned char> out;
    for (std::size_t i = 0; i + 1 < h.size(); i += 2)
        out.push_back(static_cast<unsigned char>(std::stoi(std::string(h.substr(i, 2)), nullptr, 16)));
    return out;
}

using PKey = std::unique_ptr<EVP_PKEY, decltype(&EVP_PKEY_free)>;
using MdCtx = std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)>;

PKey private_key(std::string_view seed_hex) {
    auto seed = unhex(seed_hex);
    return PKey(EVP_PKEY_new_raw_private_key(EVP_PKEY_ED25519, nullptr, seed.data(), seed.size()),
                &EVP_PKEY_free);
}

}  // namespace

std::string ref_sha256_hex(std::string_view data) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (!EVP_Digest(data.data(), data.size(), md, &len, EVP_sha256(), nullptr))
        throw std::runtime_error("EVP_Digest failed");
    return hex(md, len);
}

std::string ref_ed25519_public(std::string_view seed_hex) {
    auto key = private_key(seed_hex);
    std::array<unsigned char, 32> pub{};
    std::size_t len = pub.size();
    if (!key || !EVP_PKEY_get_raw_public_key(key.get(), pub.data(), &len))
        throw std::runtime_error("ed25519 key derivation failed");
    return hex(pub.data(), len);
}

std::string ref_ed25519_sign(std::string_view seed_hex, std::string_view message) {
    auto key = private_key(seed_hex);
    MdCtx ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
    std::array<unsigned char, 64> sig{};
    std::size_t len = sig.size();
    if (!key || EVP_DigestSignInit(ctx.get(), nullptr, nullptr, nullptr, key.get()) != 1 ||
        EVP_DigestSign(ctx.get(), sig.data(), &len,
                       reinterpret_cast<const unsigned char*>(message.data()), message.size()) != 1)
        throw std::runtime_error("ed25519 sign failed");
    return hex(sig.data(), len);
}

bool ref_ed25519_verify(std::string_view pub_hex, std::string_view message, std::string_view sig_hex) {
    auto pub = unhex(pub_hex);
    auto sig = unhex(sig_hex);
    PKey key(EVP_PKEY_new_raw_public_key(EVP_PKEY_ED25519, nullptr, pub.data(), pub.size()),
             &EVP_PKEY_free);
    if (!key) return false;
    MdCtx ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
    if (EVP_DigestVerifyInit(ctx.get(), nullptr, nullptr, nullptr, key.get()) != 1) return false;
    return EVP_DigestVerify(ctx.get(), sig.data(), sig.size(),
                            reinterpret_cast<const unsigned char*>(message.data()),
                            message.size()) == 1;
}

Signer signer(const std::string& id) {
    return {id, generate_keypair(derive_seed("signer\n" + id))};
}

std::vector<Signatory> signatories(const std::vector<Signer>& signers) {
    std::vector<Signatory> out;
    for (const auto& s : signers) out.push_back(s.signatory());
    return out;
}

std::size_t brute_quorum(std::size_t miners) {
    std::size_t t = 0;
    while (100 * t < 51 * miners) ++t;
    return t;
}

ChainBuilder::ChainBuilder(std::size_t difficulty, std::uint64_t seed)
    : seed_(seed),
      keys_{generate_keypair(derive_seed("builder-root\n" + std::to_string(seed)))},
      chain_(keys_.front().public_key, difficulty) {}

KeyPair ChainBuilder::next_key() {
    return generate_keypair(
        derive_seed("builder-owner\n" + std::to_string(seed_) + "\n" + std::to_string(++minted_)));
}

BlockHeader ChainBuilder::next_header(std::string_view text, std::string_view parent,
                                      const KeyPair& new_owner,
                                      std::vector<std::string> signatories) {
    std::sort(signatories.begin(), signatories.end());
    const Digest256 contract_hash = hash_contract(canonicalize(text));
    BlockPayload payload;
    payload.contract_id = sha256("cid\n" + std::to_string(chain_.size()) + "\n" + std::string(text))
                              .hex()
                              .substr(0, kContractIdHexLength);
    payload.parent_contract_id = std::string(parent);
    payload.contract_hash = contract_hash;
    payload.signatory_ids = std::move(signatories);
    payload.owner_pubkey = new_owner.public_key;
    payload.prev_owner_sig =
        sign(keys_.back().private_key,
             ownership_message(contract_hash, new_owner.public_key, chain_.tip().hash))
            .hex();
    return chain_.next_template(std::move(payload), 1700000000 + chain_.size(),
                                "miner-" + std::to_string(chain_.size() % 5));
}

std::string ChainBuilder::add(std::string_view text, std::string_view parent,
                              std::vector<std::string> signatories) {
    KeyPair owner = next_key();
    BlockHeader h = next_header(text, parent, owner, std::move(signatories));
    Block b = mine(h, chain_.difficulty()).block;
    AppendOutcome outcome = chain_.append_block(b, std::vector<bool>(5, true));
    if (!outcome.accepted) throw std::runtime_error("builder block rejected: " + outcome.reason);
    keys_.push_back(owner);
    return b.header.payload.contract_id;
}

namespace {

std::string shell_quote(const std::string& s) {
    std::string q = "'";
    for (char c : s) {
        if (c == '\'') q += "'\\''";
        else q.push_back(c);
    }
    return q + "'";
}

}  // namespace

ProcessResult run_pact(const std::vector<std::string>& args) {
    std::string cmd = shell_quote(PACT_BINARY);
    for (const auto& a : args) cmd += " " + shell_quote(a);
    cmd += " 2>/dev/null";
    FILE* pipe = ::popen(cmd.c_str(), "r");
    if (!pipe) throw std::runtime_error("popen failed");
    ProcessResult r;
    std::array<char, 4096> buf{};
    std::size_t n;
    while ((n = std::fread(buf.data(), 1, buf.size(), pipe)) > 0) r.out.append(buf.data(), n);
    int status = ::pclose(pipe);
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

}  // namespace pact::test
