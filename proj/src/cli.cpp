#include "pact/cli.hpp"

#include "pact/service.hpp"

#include <CLI11.hpp>

#include <sys/stat.h>

#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>

namespace pact {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

struct Globals {
    std::string data_dir = "pact-data";
    std::string wallet_dir;
    std::string remote;
    bool json = false;
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> now;
    std::size_t difficulty = 3;
    std::size_t miners = 5;
};

std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::InvalidArgument, "cannot read file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Signatory private keys held on the client side, one file per id.
class Wallet {
public:
    explicit Wallet(fs::path dir) : dir_(std::move(dir)) {}

    std::string create(const std::string& id, const std::optional<std::uint64_t>& seed) {
        const KeyPair kp = seed ? generate_keypair(derive_seed("SIGNER\n" + std::to_string(*seed) +
                                                               "\n" + id))
                                : generate_keypair();
        fs::create_directories(dir_);
        const fs::path path = dir_ / (id + ".key");
        {
            std::ofstream out(path, std::ios::trunc);
            if (!out) throw Error(ErrorCode::Storage, "cannot write " + path.string());
            out << kp.private_key << '\n';
        }
        ::chmod(path.c_str(), 0600);
        return kp.public_key;
    }

    std::string private_key(const std::string& id) const {
        const fs::path path = dir_ / (id + ".key");
        std::ifstream in(path);
        std::string key;
        if (!in || !(in >> key)) {
            throw Error(ErrorCode::InvalidArgument,
                        "no wallet key for '" + id + "' at " + path.string());
        }
        return key;
    }

private:
    fs::path dir_;
};

class Transport {
public:
    explicit Transport(const Globals& g) : g_(g) {}

    ApiResponse call(std::string_view method, std::string path, const json& body = json::object(),
                     const Headers& headers = {}) {
        if (!g_.remote.empty()) {
            return remote_call(g_.remote, method, path, body, headers);
        }
        if (!engine_) {
            EngineOptions opts;
            opts.data_dir = g_.data_dir;
            opts.config.difficulty = g_.difficulty;
            opts.config.miners = g_.miners;
            opts.seed = g_.seed;
            opts.clock = g_.now ? fixed_clock(*g_.now) : system_clock();
            engine_ = std::make_unique<Engine>(std::move(opts));
            api_ = std::make_unique<Api>(*engine_);
        }
        return api_->handle(method, path, body.dump(), headers);
    }

private:
    const Globals& g_;
    std::unique_ptr<Engine> engine_;
    std::unique_ptr<Api> api_;
};

bool ok(const ApiResponse& r) { return r.status >= 200 && r.status < 300; }

int report_error(const ApiResponse& r, const Globals& g, std::ostream& out, std::ostream& err) {
    const std::string code = r.body.contains("error") ? r.body["error"].value("code", "ERROR") : "ERROR";
    const std::string msg = r.body.contains("error") ? r.body["error"].value("message", "") : "";
    if (g.json) out << r.body.dump() << '\n';
    err << "error: " << code << ": " << msg << '\n';
    return 1;
}

std::string short_hex(const std::string& s) { return s.size() > 16 ? s.substr(0, 16) : s; }

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    Globals g;
    CLI::App app{"pact: unanimous contract consensus on a proof-of-work ledger", "pact"};
    app.require_subcommand(1);
    app.fallthrough();
    app.add_option("--data-dir", g.data_dir, "Data directory")->envname("PACT_DATA_DIR");
    app.add_option("--wallet", g.wallet_dir, "Signatory key directory (default DATA_DIR/wallet)");
    app.add_option("--remote", g.remote, "Talk to a running service at http://host:port")
        ->envname("PACT_REMOTE");
    app.add_flag("--json", g.json, "Emit exactly one JSON document on stdout");
    app.add_option("--seed", g.seed, "Seed for keys and miner draws");
    app.add_option("--now", g.now, "Fixed clock (Unix seconds)");
    app.add_option("--difficulty", g.difficulty, "Leading zero hex digits (new data dirs only)");
    app.add_option("--miners", g.miners, "Miner count (new data dirs only)");

    // group
    auto* group_cmd = app.add_subcommand("group", "Consensus groups");
    group_cmd->require_subcommand(1);
    std::vector<std::string> members;
    auto* group_create = group_cmd->add_subcommand("create", "Create a group");
    group_create->add_option("--member", members, "id or id:public_key (repeatable)")->required();
    std::string group_id;
    auto* group_show = group_cmd->add_subcommand("show", "Show a group");
    group_show->add_option("id", group_id)->required();

    // propose
    std::string prop_group, prop_file, prop_text, prop_amends;
    auto* propose = app.add_subcommand("propose", "Open a proposal");
    propose->add_option("--group", prop_group)->required();
    auto* pf = propose->add_option("--file", prop_file, "Contract text file");
    auto* pt = propose->add_option("--text", prop_text, "Contract text");
    pf->excludes(pt);
    propose->add_option("--amends", prop_amends, "Version id this amendment replaces");

    auto* proposal_cmd = app.add_subcommand("proposal", "Proposals");
    proposal_cmd->require_subcommand(1);
    std::string proposal_id;
    auto* proposal_show = proposal_cmd->add_subcommand("show", "Show a proposal");
    proposal_show->add_option("id", proposal_id)->required();

    // vote
    std::string vote_prop, vote_as, vote_file, vote_hash;
    bool vote_yes = false, vote_no = false;
    auto* vote = app.add_subcommand("vote", "Cast a signed vote");
    vote->add_option("--proposal", vote_prop)->required();
    vote->add_option("--as", vote_as, "Signatory id")->required();
    auto* vy = vote->add_flag("--yes", vote_yes);
    auto* vn = vote->add_flag("--no", vote_no);
    vy->excludes(vn);
    auto* vf = vote->add_option("--file", vote_file, "Text you read (digest is submitted)");
    auto* vh = vote->add_option("--hash", vote_hash, "Digest to submit");
    vf->excludes(vh);

    std::string fin_prop;
    auto* finalize = app.add_subcommand("finalize", "Mint owner and mine the block");
    finalize->add_option("--proposal", fin_prop)->required();

    auto* chain_cmd = app.add_subcommand("chain", "Ledger");
    chain_cmd->require_subcommand(1);
    auto* chain_show = chain_cmd->add_subcommand("show", "Print blocks");
    auto* chain_verify = chain_cmd->add_subcommand("verify", "Verify the whole chain");

    std::string history_id;
    auto* history = app.add_subcommand("history", "Lineage of an original contract");
    history->add_option("contract-id", history_id)->required();

    std::string verify_file;
    auto* verify = app.add_subcommand("verify", "Check a document against the chain");
    verify->add_option("file", verify_file)->required();

    auto* sim_cmd = app.add_subcommand("sim", "Miner-noise simulation");
    sim_cmd->require_subcommand(1);
    SimConfig sim;
    std::string sim_mode = "per_request_bernoulli";
    std::string sim_csv;
    std::optional<std::uint64_t> sim_seed;
    auto* sim_run = sim_cmd->add_subcommand("run", "Run a simulation");
    sim_run->add_option("--miners", sim.miner_count);
    sim_run->add_option("--noise", sim.noise_p);
    sim_run->add_option("--requests", sim.requests);
    sim_run->add_option("--valid-fraction", sim.valid_fraction);
    sim_run->add_option("--mode", sim_mode)->check(CLI::IsMember({"per_request_bernoulli", "fixed_subset"}));
    sim_run->add_option("--adversaries", sim.adversaries);
    sim_run->add_option("--difficulty", sim.difficulty);
    sim_run->add_option("--seed", sim_seed);
    sim_run->add_flag("--mine-blocks", sim.mine_blocks);
    sim_run->add_option("--workers", sim.workers);
    sim_run->add_option("--csv", sim_csv, "Write the per-request log as CSV");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp& e) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << "\n\n" << app.help();
        return 2;
    }

    if (g.wallet_dir.empty()) g.wallet_dir = (fs::path(g.data_dir) / "wallet").string();
    Transport transport(g);
    Wallet wallet(g.wallet_dir);

    auto emit = [&](const ApiResponse& r, auto&& human) -> int {
        if (!ok(r)) return report_error(r, g, out, err);
        if (g.json) {
            out << r.body.dump() << '\n';
        } else {
            human(r.body);
        }
        return 0;
    };

    try {
        if (group_create->parsed()) {
            json sigs = json::array();
            for (const auto& m : members) {
                const auto colon = m.find(':');
                const std::string id = m.substr(0, colon);
                const std::string pk = colon == std::string::npos ? wallet.create(id, g.seed)
                                                                   : m.substr(colon + 1);
                sigs.push_back({{"id", id}, {"public_key", pk}, {"display_name", id}});
            }
            return emit(transport.call("POST", "/groups", {{"signatories", sigs}}),
                        [&](const ordered_json& b) {
                            out << "created group " << b["id"].get<std::string>() << " with "
                                << b["signatories"].size() << " signatories\n";
                        });
        }
        if (group_show->parsed()) {
            return emit(transport.call("GET", "/groups/" + group_id), [&](const ordered_json& b) {
                out << "group " << b["id"].get<std::string>() << '\n';
                for (const auto& s : b["signatories"]) {
                    out << "  " << s["id"].get<std::string>() << "  "
                        << s["public_key"].get<std::string>() << '\n';
                }
            });
        }
        if (propose->parsed()) {
            if (prop_file.empty() && !pt->count()) {
                throw CLI::RequiredError("--file or --text");
            }
            json body;
            body["text"] = prop_file.empty() ? prop_text : read_text_file(prop_file);
            body["kind"] = prop_amends.empty() ? "original" : "amendment";
            body["parent_version_id"] = prop_amends;
            return emit(transport.call("POST", "/groups/" + prop_group + "/proposals", body),
                        [&](const ordered_json& b) {
                            out << "opened " << b["id"].get<std::string>() << " ("
                                << b["kind"].get<std::string>() << ") expected hash "
                                << b["expected_hash"].get<std::string>() << '\n';
                        });
        }
        if (proposal_show->parsed()) {
            return emit(transport.call("GET", "/proposals/" + proposal_id),
                        [&](const ordered_json& b) {
                            out << b["id"].get<std::string>() << ": "
                                << b["status"].get<std::string>() << " ("
                                << b["submissions"].size() << "/"
                                << b["required_signatories"].size() << " votes)\n";
                            for (const auto& s : b["submissions"]) {
                                out << "  " << s["signatory_id"].get<std::string>() << ' '
                                    << (s["vote"].get<bool>() ? "yes" : "no")
                                    << (s["hash_matches"].get<bool>() ? "" : " (digest mismatch)")
                                    << '\n';
                            }
                        });
        }
        if (vote->parsed()) {
            if (!vote_yes && !vote_no) throw CLI::RequiredError("--yes or --no");
            std::string submitted = vote_hash;
            if (!vote_file.empty()) {
                submitted = hash_contract(canonicalize(read_text_file(vote_file))).hex();
            } else if (submitted.empty()) {
                // The signatory read the proposal as served; submit its digest.
                const ApiResponse p = transport.call("GET", "/proposals/" + vote_prop);
                if (!ok(p)) return report_error(p, g, out, err);
                submitted = hash_contract(canonicalize(p.body["text"].get<std::string>())).hex();
            }
            const Digest256 digest = Digest256::from_hex(submitted);
            const Signature sig =
                sign(wallet.private_key(vote_as), vote_message(vote_prop, digest, vote_yes));
            json body{{"signatory_id", vote_as},
                      {"submitted_hash", digest.hex()},
                      {"vote", vote_yes},
                      {"signature", sig.hex()}};
            return emit(transport.call("POST", "/proposals/" + vote_prop + "/votes", body,
                                       {{std::string(kSignatoryHeader), vote_as}}),
                        [&](const ordered_json& b) {
                            out << vote_as << " voted " << (vote_yes ? "yes" : "no") << " on "
                                << vote_prop << "; status " << b["status"].get<std::string>()
                                << " (" << b["submissions"].size() << "/"
                                << b["required_signatories"].size() << " votes)\n";
                        });
        }
        if (finalize->parsed()) {
            return emit(transport.call("POST", "/proposals/" + fin_prop + "/finalize"),
                        [&](const ordered_json& b) {
                            out << "finalized " << fin_prop << " as version "
                                << b["version"]["version_id"].get<std::string>() << "; block "
                                << b["block"]["index"].get<std::uint64_t>() << ' '
                                << b["block"]["hash"].get<std::string>() << " ("
                                << b["quorum"]["yes_count"].get<std::size_t>() << " miners, "
                                << b["quorum"]["threshold"].get<std::size_t>() << " required)\n";
                        });
        }
        if (chain_show->parsed()) {
            return emit(transport.call("GET", "/chain"), [&](const ordered_json& b) {
                for (const auto& blk : b) {
                    out << '#' << blk["index"].get<std::uint64_t>() << ' '
                        << blk["hash"].get<std::string>() << " contract "
                        << blk["contract_id"].get<std::string>();
                    const auto parent = blk["parent_contract_id"].get<std::string>();
                    if (!parent.empty()) out << " amends " << parent;
                    out << '\n';
                }
            });
        }
        if (chain_verify->parsed()) {
            const ApiResponse r = transport.call("GET", "/chain/verify");
            if (!ok(r)) return report_error(r, g, out, err);
            const bool valid = r.body["valid"].get<bool>();
            if (g.json) {
                out << r.body.dump() << '\n';
            } else if (valid) {
                out << "valid (" << r.body["length"].get<std::size_t>() << " blocks)\n";
            } else {
                out << "invalid at block " << r.body["first_bad_index"].get<std::uint64_t>()
                    << ": " << r.body["rule"].get<std::string>() << '\n';
            }
            return valid ? 0 : 1;
        }
        if (history->parsed()) {
            return emit(transport.call("GET", "/contracts/" + history_id + "/history"),
                        [&](const ordered_json& b) {
                            for (const auto& v : b["versions"]) {
                                out << v["version_id"].get<std::string>() << "  block "
                                    << v["block_index"].get<std::uint64_t>() << "  hash "
                                    << short_hex(v["contract_hash"].get<std::string>())
                                    << "  owner "
                                    << short_hex(v["owner_pubkey"].get<std::string>()) << '\n';
                            }
                        });
        }
        if (verify->parsed()) {
            const ApiResponse r =
                transport.call("POST", "/verify", {{"text", read_text_file(verify_file)}});
            if (!ok(r)) return report_error(r, g, out, err);
            const bool found = r.body["found"].get<bool>();
            if (g.json) {
                out << r.body.dump() << '\n';
            } else if (found) {
                out << "found: block " << r.body["block_index"].get<std::uint64_t>()
                    << " version " << r.body["version_id"].get<std::string>() << " (lineage "
                    << r.body["lineage_root"].get<std::string>() << ")\n";
            } else {
                out << "not found: digest " << r.body["digest"].get<std::string>() << '\n';
            }
            return found ? 0 : 1;
        }
        if (sim_run->parsed()) {
            sim.adversary_mode = parse_adversary_mode(sim_mode);
            if (sim_seed) sim.seed = *sim_seed;
            else if (g.seed) sim.seed = *g.seed;

            ordered_json summary;
            std::string csv;
            if (!g.remote.empty()) {
                SimReport shell;
                shell.config = sim;
                json body = report_summary(shell)["config"];
                body["include_log"] = !sim_csv.empty();
                const ApiResponse r = transport.call("POST", "/sim/run", body);
                if (!ok(r)) return report_error(r, g, out, err);
                summary = r.body;
                if (summary.contains("log")) {
                    std::ostringstream ss;
                    ss << "request_id,valid,yes_count,accepted\n";
                    for (const auto& row : summary["log"]) {
                        ss << row["request_id"].get<std::uint64_t>() << ','
                           << (row["valid"].get<bool>() ? 1 : 0) << ','
                           << row["yes_count"].get<std::size_t>() << ','
                           << (row["accepted"].get<bool>() ? 1 : 0) << '\n';
                    }
                    csv = ss.str();
                    summary.erase("log");
                }
            } else {
                const SimReport report = run_simulation(sim);
                summary = report_summary(report);
                if (!sim_csv.empty()) csv = report_csv(report);
            }
            if (!sim_csv.empty()) {
                std::ofstream f(sim_csv, std::ios::trunc);
                if (!f) throw Error(ErrorCode::Storage, "cannot write " + sim_csv);
                f << csv;
            }
            if (g.json) {
                out << summary.dump() << '\n';
            } else {
                out << "miners " << summary["config"]["miner_count"].get<std::size_t>()
                    << ", noise " << summary["config"]["noise_p"].get<double>() << ", quorum "
                    << summary["quorum_threshold"].get<std::size_t>() << '\n'
                    << "truthful-request failure rate "
                    << summary["truthful_request_failure_rate"].get<double>() << " ("
                    << summary["truthful_failures"].get<std::uint64_t>() << "/"
                    << summary["valid_requests"].get<std::uint64_t>() << ")\n"
                    << "analytic failure probability "
                    << summary["analytic_failure_probability"].get<double>() << '\n'
                    << "adversarial acceptance rate "
                    << summary["adversarial_acceptance_rate"].get<double>() << " ("
                    << summary["adversarial_acceptances"].get<std::uint64_t>() << "/"
                    << summary["invalid_requests"].get<std::uint64_t>() << ")\n";
            }
            return 0;
        }
    } catch (const CLI::ParseError& e) {
        err << "usage error: " << e.what() << '\n';
        return 2;
    } catch (const Error& e) {
        const ApiResponse r{http_status(e.code()), error_body(to_string(e.code()), e.what())};
        return report_error(r, g, out, err);
    } catch (const std::exception& e) {
        const ApiResponse r{500, error_body("INTERNAL", e.what())};
        return report_error(r, g, out, err);
    }
    err << app.help();
    return 2;
}

}  // namespace pact
