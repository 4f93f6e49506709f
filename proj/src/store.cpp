#include "pact/store.hpp"

#include "pact/error.hpp"

#include <fcntl.h>
#include <sys/stat.h>
#include <unistd.h>

#include <cerrno>
#include <cstring>
#include <fstream>
#include <random>
#include <sstream>

namespace pact {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

[[noreturn]] void storage_failure(const std::string& what, const fs::path& path) {
    throw Error(ErrorCode::Storage, what + " '" + path.string() + "': " + std::strerror(errno));
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) storage_failure("cannot read", path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Write to a sibling temp file and rename over the target.
void write_file_atomic(const fs::path& path, std::string_view content, mode_t mode) {
    const fs::path tmp = path.string() + ".tmp";
    const int fd = ::open(tmp.c_str(), O_WRONLY | O_CREAT | O_TRUNC, mode);
    if (fd < 0) storage_failure("cannot create", tmp);
    std::size_t done = 0;
    while (done < content.size()) {
        const ssize_t n = ::write(fd, content.data() + done, content.size() - done);
        if (n < 0) {
            if (errno == EINTR) continue;
            ::close(fd);
            storage_failure("cannot write", tmp);
        }
        done += static_cast<std::size_t>(n);
    }
    ::fchmod(fd, mode);
    ::fsync(fd);
    ::close(fd);
    if (::rename(tmp.c_str(), path.c_str()) != 0) storage_failure("cannot rename", tmp);
}

template <typename T>
T field(const json& j, const char* key) {
    if (!j.contains(key)) {
        throw Error(ErrorCode::Decode, std::string("missing field '") + key + "'");
    }
    try {
        return j.at(key).get<T>();
    } catch (const json::exception&) {
        throw Error(ErrorCode::Decode, std::string("field '") + key + "' has the wrong type");
    }
}

StoreConfig read_config(const fs::path& path) {
    const json j = json::parse(read_file(path), nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        throw Error(ErrorCode::CorruptLog, "config.json is not a JSON object");
    }
    StoreConfig c;
    c.difficulty = field<std::size_t>(j, "difficulty");
    c.miners = field<std::size_t>(j, "miners");
    c.miner_noise = field<double>(j, "miner_noise");
    return c;
}

void write_config(const fs::path& path, const StoreConfig& c) {
    ordered_json j;
    j["difficulty"] = c.difficulty;
    j["miners"] = c.miners;
    j["miner_noise"] = c.miner_noise;
    write_file_atomic(path, j.dump(2) + "\n", 0644);
}

void replay(ConsensusRegistry& reg, const EventRecord& ev, const StorePaths& paths,
            const std::vector<Block>& blocks, std::size_t& accepted_blocks) {
    const json body = ev.body;
    switch (ev.kind) {
        case EventKind::GroupCreated: {
            std::vector<Signatory> sigs;
            for (const auto& s : field<json>(body, "signatories")) {
                sigs.push_back(Signatory{field<std::string>(s, "id"),
                                         field<std::string>(s, "public_key"),
                                         field<std::string>(s, "display_name")});
            }
            reg.create_group(std::move(sigs), field<std::string>(body, "group_id"));
            break;
        }
        case EventKind::ProposalOpened: {
            const Digest256 digest = Digest256::from_hex(field<std::string>(body, "text_digest"));
            const fs::path tf = paths.text_file(digest);
            if (!fs::exists(tf)) {
                throw Error(ErrorCode::CorruptLog, "missing contract text " + tf.string());
            }
            const Proposal& p = reg.open_proposal(
                field<std::string>(body, "group_id"), read_file(tf),
                parse_proposal_kind(field<std::string>(body, "kind")),
                field<std::string>(body, "parent_version_id"),
                field<std::string>(body, "proposal_id"));
            if (p.expected_hash != digest) {
                throw Error(ErrorCode::CorruptLog, "contract text " + tf.string() +
                                                       " does not match its digest");
            }
            break;
        }
        case EventKind::VoteCast:
            reg.cast_vote(field<std::string>(body, "proposal_id"),
                          field<std::string>(body, "signatory_id"),
                          Digest256::from_hex(field<std::string>(body, "submitted_hash")),
                          field<bool>(body, "vote"),
                          Signature::from_hex(field<std::string>(body, "signature")));
            break;
        case EventKind::ProposalFinalized: {
            KeyPair public_only;
            public_only.public_key = field<std::string>(body, "owner_pubkey");
            Finalization fin =
                reg.prepare_finalization(field<std::string>(body, "proposal_id"), public_only);
            if (fin.version.version_id != field<std::string>(body, "version_id")) {
                throw Error(ErrorCode::CorruptLog, "finalized version id does not replay");
            }
            reg.commit_finalization(fin);
            break;
        }
        case EventKind::BlockAccepted: {
            const auto index = field<std::uint64_t>(body, "index");
            const auto hash = field<std::string>(body, "hash");
            if (index >= blocks.size() || blocks[index].hash.hex() != hash) {
                throw Error(ErrorCode::InvalidChain,
                            "chain.jsonl disagrees with the event log at block " +
                                std::to_string(index));
            }
            const BlockPayload& p = blocks[index].header.payload;
            if (!reg.has_version(p.contract_id) ||
                reg.version(p.contract_id).owner_pubkey != p.owner_pubkey ||
                reg.version(p.contract_id).contract_hash != p.contract_hash) {
                throw Error(ErrorCode::InvalidChain,
                            "block " + std::to_string(index) + " records an unknown version");
            }
            ++accepted_blocks;
            break;
        }
    }
}

}  // namespace

std::string_view to_string(EventKind kind) noexcept {
    switch (kind) {
        case EventKind::GroupCreated: return "group_created";
        case EventKind::ProposalOpened: return "proposal_opened";
        case EventKind::VoteCast: return "vote_cast";
        case EventKind::ProposalFinalized: return "proposal_finalized";
        case EventKind::BlockAccepted: return "block_accepted";
    }
    return "unknown";
}

EventKind parse_event_kind(std::string_view s) {
    for (auto k : {EventKind::GroupCreated, EventKind::ProposalOpened, EventKind::VoteCast,
                   EventKind::ProposalFinalized, EventKind::BlockAccepted}) {
        if (to_string(k) == s) return k;
    }
    throw Error(ErrorCode::Decode, "unknown event kind '" + std::string(s) + "'");
}

ordered_json to_json(const EventRecord& rec) {
    ordered_json j;
    j["seq"] = rec.seq;
    j["kind"] = std::string(to_string(rec.kind));
    j["body"] = rec.body;
    j["recorded_at"] = rec.recorded_at;
    return j;
}

ordered_json group_created_body(const ConsensusGroup& group) {
    ordered_json sigs = ordered_json::array();
    for (const auto& s : group.signatories) {
        sigs.push_back({{"id", s.id}, {"public_key", s.public_key}, {"display_name", s.display_name}});
    }
    ordered_json j;
    j["group_id"] = group.id;
    j["signatories"] = std::move(sigs);
    return j;
}

ordered_json proposal_opened_body(const Proposal& p) {
    ordered_json j;
    j["proposal_id"] = p.id;
    j["group_id"] = p.group_id;
    j["kind"] = std::string(to_string(p.kind));
    j["parent_version_id"] = p.parent_version_id;
    j["text_digest"] = p.expected_hash.hex();
    return j;
}

ordered_json vote_cast_body(std::string_view proposal_id, const Submission& s) {
    ordered_json j;
    j["proposal_id"] = std::string(proposal_id);
    j["signatory_id"] = s.signatory_id;
    j["submitted_hash"] = s.submitted_hash.hex();
    j["vote"] = s.vote;
    j["signature"] = s.vote_signature.hex();
    return j;
}

ordered_json proposal_finalized_body(const ApprovedVersion& v) {
    ordered_json j;
    j["proposal_id"] = v.proposal_id;
    j["version_id"] = v.version_id;
    j["owner_id"] = v.owner_id;
    j["owner_pubkey"] = v.owner_pubkey;
    return j;
}

ordered_json block_accepted_body(const Block& block, const AppendOutcome& outcome) {
    ordered_json j;
    j["index"] = block.header.index;
    j["hash"] = block.hash.hex();
    j["contract_id"] = block.header.payload.contract_id;
    j["yes_count"] = outcome.yes_count;
    j["threshold"] = outcome.threshold;
    return j;
}

ordered_json block_to_json(const Block& block) {
    const BlockHeader& h = block.header;
    const BlockPayload& p = h.payload;
    ordered_json j;
    j["index"] = h.index;
    j["timestamp"] = h.timestamp;
    j["miner_id"] = h.miner_id;
    j["contract_id"] = p.contract_id;
    j["parent_contract_id"] = p.parent_contract_id;
    j["contract_hash"] = p.contract_hash.hex();
    j["signatory_ids"] = p.signatory_ids;
    j["owner_pubkey"] = p.owner_pubkey;
    j["prev_owner_sig"] = p.prev_owner_sig;
    j["prev_hash"] = h.prev_hash.hex();
    j["nonce"] = h.nonce;
    j["hash"] = block.hash.hex();
    return j;
}

Block block_from_json(const json& j) {
    Block b;
    BlockHeader& h = b.header;
    BlockPayload& p = h.payload;
    h.index = field<std::uint64_t>(j, "index");
    h.timestamp = field<std::uint64_t>(j, "timestamp");
    h.miner_id = field<std::string>(j, "miner_id");
    p.contract_id = field<std::string>(j, "contract_id");
    p.parent_contract_id = field<std::string>(j, "parent_contract_id");
    p.contract_hash = Digest256::from_hex(field<std::string>(j, "contract_hash"));
    p.signatory_ids = field<std::vector<std::string>>(j, "signatory_ids");
    p.owner_pubkey = field<std::string>(j, "owner_pubkey");
    p.prev_owner_sig = field<std::string>(j, "prev_owner_sig");
    h.prev_hash = Digest256::from_hex(field<std::string>(j, "prev_hash"));
    h.nonce = field<std::uint64_t>(j, "nonce");
    b.hash = Digest256::from_hex(field<std::string>(j, "hash"));
    return b;
}

void append_line(const fs::path& path, std::string_view line, bool sync) {
    if (line.find('\n') != std::string_view::npos) {
        throw Error(ErrorCode::InvalidArgument, "records must not contain line feeds");
    }
    const int fd = ::open(path.c_str(), O_WRONLY | O_APPEND | O_CREAT, 0644);
    if (fd < 0) storage_failure("cannot open", path);
    struct stat st {};
    ::fstat(fd, &st);
    const off_t before = st.st_size;

    std::string record(line);
    record.push_back('\n');
    std::size_t done = 0;
    while (done < record.size()) {
        const ssize_t n = ::write(fd, record.data() + done, record.size() - done);
        if (n < 0) {
            if (errno == EINTR) continue;
            const int saved = errno;
            [[maybe_unused]] const int rc = ::ftruncate(fd, before);
            ::close(fd);
            errno = saved;
            storage_failure("cannot append to", path);
        }
        done += static_cast<std::size_t>(n);
    }
    if (sync && ::fsync(fd) != 0) {
        const int saved = errno;
        ::close(fd);
        errno = saved;
        storage_failure("cannot sync", path);
    }
    ::close(fd);
}

std::vector<json> read_json_lines(const fs::path& path) {
    std::vector<json> out;
    if (!fs::exists(path)) return out;
    const std::string content = read_file(path);
    std::size_t pos = 0;
    std::size_t line_no = 0;
    while (pos < content.size()) {
        ++line_no;
        const std::size_t nl = content.find('\n', pos);
        if (nl == std::string::npos) {
            throw Error(ErrorCode::CorruptLog, path.filename().string() + " line " +
                                                   std::to_string(line_no) +
                                                   ": truncated record (no line terminator)");
        }
        json j = json::parse(content.begin() + static_cast<std::ptrdiff_t>(pos),
                             content.begin() + static_cast<std::ptrdiff_t>(nl), nullptr, false);
        if (j.is_discarded() || !j.is_object()) {
            throw Error(ErrorCode::CorruptLog, path.filename().string() + " line " +
                                                   std::to_string(line_no) + ": not a JSON object");
        }
        out.push_back(std::move(j));
        pos = nl + 1;
    }
    return out;
}

std::uint64_t EventLog::append(EventKind kind, ordered_json body, std::uint64_t recorded_at) {
    EventRecord rec{last_seq_ + 1, kind, std::move(body), recorded_at};
    append_line(path_, to_json(rec).dump(), sync_);
    last_seq_ = rec.seq;
    return rec.seq;
}

std::vector<EventRecord> EventLog::read_all(const fs::path& path) {
    std::vector<EventRecord> out;
    std::size_t line_no = 0;
    for (const auto& j : read_json_lines(path)) {
        ++line_no;
        try {
            EventRecord rec;
            rec.seq = field<std::uint64_t>(j, "seq");
            rec.kind = parse_event_kind(field<std::string>(j, "kind"));
            rec.body = field<ordered_json>(j, "body");
            rec.recorded_at = field<std::uint64_t>(j, "recorded_at");
            if (rec.seq != line_no) {
                throw Error(ErrorCode::CorruptLog, "expected seq " + std::to_string(line_no));
            }
            out.push_back(std::move(rec));
        } catch (const Error& e) {
            throw Error(ErrorCode::CorruptLog,
                        "events.jsonl line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

KeyVault::KeyVault(fs::path path) : path_(std::move(path)) {
    if (!fs::exists(path_)) return;
    const json j = json::parse(read_file(path_), nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
        throw Error(ErrorCode::CorruptLog, "vault.json is not a JSON object");
    }
    for (const auto& [id, key] : j.items()) {
        if (!key.is_string()) throw Error(ErrorCode::CorruptLog, "vault entry is not a string");
        keys_[id] = key.get<std::string>();
    }
}

void KeyVault::put(const std::string& owner_id, const std::string& private_key) {
    keys_[owner_id] = private_key;
    const json j(keys_);
    write_file_atomic(path_, j.dump(2) + "\n", 0600);
}

std::optional<std::string> KeyVault::get(std::string_view owner_id) const {
    auto it = keys_.find(std::string(owner_id));
    if (it == keys_.end()) return std::nullopt;
    return it->second;
}

LoadedState load_state(const StorePaths& paths, const LoadOptions& opts) {
    fs::create_directories(paths.texts());

    StoreConfig config = opts.config;
    if (fs::exists(paths.config())) {
        config = read_config(paths.config());
    } else {
        write_config(paths.config(), config);
    }

    if (!fs::exists(paths.chain())) {
        if (fs::exists(paths.events()) && fs::file_size(paths.events()) > 0) {
            throw Error(ErrorCode::InvalidChain, "events.jsonl exists but chain.jsonl is missing");
        }
        KeyVault vault(paths.vault());
        KeyPair root;
        if (opts.seed) {
            root = generate_keypair(derive_seed("ROOT\n" + std::to_string(*opts.seed)));
        } else {
            root = generate_keypair();
        }
        vault.put(std::string(kRootOwnerId), root.private_key);
        append_line(paths.chain(), block_to_json(make_genesis(root.public_key)).dump(), true);
    }

    std::vector<Block> blocks;
    {
        std::size_t line_no = 0;
        for (const auto& j : read_json_lines(paths.chain())) {
            ++line_no;
            try {
                blocks.push_back(block_from_json(j));
            } catch (const Error& e) {
                throw Error(ErrorCode::CorruptLog,
                            "chain.jsonl line " + std::to_string(line_no) + ": " + e.what());
            }
        }
    }
    if (blocks.empty()) {
        throw Error(ErrorCode::InvalidChain, "chain.jsonl has no genesis block");
    }
    Chain chain(std::move(blocks), config.difficulty);
    const ChainVerdict verdict = verify_chain(chain);
    if (!verdict.valid) {
        throw Error(ErrorCode::InvalidChain,
                    "chain.jsonl fails verification at block " +
                        std::to_string(*verdict.first_bad_index) + " (" +
                        std::string(to_string(*verdict.rule)) + ")");
    }

    LoadedState state{config, ConsensusRegistry{}, std::move(chain), 0};
    const std::vector<EventRecord> events = EventLog::read_all(paths.events());
    std::size_t accepted_blocks = 0;
    for (const auto& ev : events) {
        try {
            replay(state.registry, ev, paths, state.chain.blocks(), accepted_blocks);
        } catch (const Error& e) {
            if (e.code() == ErrorCode::InvalidChain) throw;
            throw Error(ErrorCode::CorruptLog, "events.jsonl line " + std::to_string(ev.seq) +
                                                   " does not replay: " + e.what());
        }
    }
    if (accepted_blocks + 1 != state.chain.size()) {
        throw Error(ErrorCode::InvalidChain,
                    "chain.jsonl holds " + std::to_string(state.chain.size() - 1) +
                        " blocks but the event log accepted " + std::to_string(accepted_blocks));
    }
    state.last_seq = events.empty() ? 0 : events.back().seq;
    return state;
}

Store::Store(StorePaths paths, bool sync, std::uint64_t last_seq)
    : paths_(std::move(paths)),
      sync_(sync),
      events_(paths_.events(), sync, last_seq),
      vault_(paths_.vault()) {}

std::uint64_t Store::append_event(EventKind kind, ordered_json body, std::uint64_t recorded_at) {
    return events_.append(kind, std::move(body), recorded_at);
}

void Store::append_block(const Block& block) {
    append_line(paths_.chain(), block_to_json(block).dump(), sync_);
}

void Store::put_text(const CanonicalText& text) {
    const fs::path path = paths_.text_file(hash_contract(text));
    if (fs::exists(path)) return;
    write_file_atomic(path, text.bytes(), 0644);
}

std::optional<std::string> Store::get_text(const Digest256& digest) const {
    const fs::path path = paths_.text_file(digest);
    if (!fs::exists(path)) return std::nullopt;
    return read_file(path);
}

}  // namespace pact
