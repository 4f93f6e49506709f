#include "pact/cli.hpp"
#include "support.hpp"

#include <gtest/gtest.h>
#include <json.hpp>

#include <algorithm>
#include <sstream>

using namespace pact;
using nlohmann::json;

namespace {

struct CliRun {
    int code;
    std::string out;
    std::string err;
    json doc() const { return json::parse(out); }
};

class CliTest : public ::testing::Test {
protected:
    CliRun pact(std::vector<std::string> args, bool as_json = true) {
        std::vector<std::string> full = {"pact", "--data-dir", data.string(), "--seed", "5",
                                         "--now", "1700000000", "--difficulty", "1"};
        if (as_json) full.push_back("--json");
        full.insert(full.end(), args.begin(), args.end());
        std::vector<const char*> argv;
        for (const auto& a : full) argv.push_back(a.c_str());
        std::ostringstream out, err;
        const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
        return {code, out.str(), err.str()};
    }

    std::string file(const std::string& name, const std::string& contents) {
        const auto p = dir / name;
        test::write_file(p, contents);
        return p.string();
    }

    // Group of three, one approved original and one approved amendment.
    std::pair<std::string, std::string> scenario() {
        const CliRun g = pact({"group", "create", "--member", "alice", "--member", "bob", "--member", "carol"});
        EXPECT_EQ(g.code, 0) << g.out << g.err;
        const std::string gid = g.doc()["id"];
        const std::string v1 = approve(gid, file("v1.txt", "Agreement v1\n"), "");
        const std::string v2 = approve(gid, file("v2.txt", "Agreement v2\n"), v1);
        return {v1, v2};
    }

    std::string approve(const std::string& gid, const std::string& path, const std::string& parent) {
        std::vector<std::string> args = {"propose", "--group", gid, "--file", path};
        if (!parent.empty()) args.insert(args.end(), {"--amends", parent});
        const CliRun p = pact(args);
        EXPECT_EQ(p.code, 0) << p.out << p.err;
        const std::string pid = p.doc()["id"];
        for (const char* who : {"alice", "bob", "carol"}) {
            const CliRun v = pact({"vote", "--proposal", pid, "--as", who, "--yes"});
            EXPECT_EQ(v.code, 0) << v.out << v.err;
        }
        const CliRun f = pact({"finalize", "--proposal", pid});
        EXPECT_EQ(f.code, 0) << f.out << f.err;
        return f.doc()["version"]["version_id"];
    }

    test::TempDir dir;
    std::filesystem::path data = dir / "data";
};

}  // namespace

TEST_F(CliTest, EndToEndLocalMode) {
    const auto [v1, v2] = scenario();
    const CliRun h = pact({"history", v1});
    ASSERT_EQ(h.code, 0);
    const json versions = h.doc()["versions"];
    ASSERT_EQ(versions.size(), 2u);
    EXPECT_EQ(versions[0]["version_id"], v1);
    EXPECT_EQ(versions[1]["version_id"], v2);

    const CliRun v = pact({"chain", "verify"});
    EXPECT_EQ(v.code, 0);
    EXPECT_EQ(v.doc()["valid"], true);
    EXPECT_EQ(v.doc()["length"], 3);

    const CliRun text = pact({"chain", "verify"}, false);
    EXPECT_EQ(text.code, 0);
    EXPECT_NE(text.out.find("valid"), std::string::npos);
}

TEST_F(CliTest, VerifyDocument) {
    scenario();
    const CliRun ok = pact({"verify", file("copy.txt", "Agreement v1\r\n")});
    EXPECT_EQ(ok.code, 0);
    EXPECT_EQ(ok.doc()["found"], true);
    EXPECT_EQ(ok.doc()["block_index"], 1);

    const CliRun bad = pact({"verify", file("tampered.txt", "Agreement v1.\n")});
    EXPECT_EQ(bad.code, 1);
    EXPECT_EQ(bad.doc()["found"], false);
}

TEST_F(CliTest, SameSeedAndClockGiveIdenticalOutput) {
    const auto first = scenario();
    const std::string chain_a = pact({"chain", "show"}).out;
    const std::string history_a = pact({"history", first.first}).out;

    data = dir / "data-2";
    const auto second = scenario();
    EXPECT_EQ(second, first);
    EXPECT_EQ(pact({"chain", "show"}).out, chain_a);
    EXPECT_EQ(pact({"history", second.first}).out, history_a);
}

TEST_F(CliTest, JsonOutputMatchesGoldenFiles) {
    const auto [v1, v2] = scenario();
    EXPECT_EQ(pact({"chain", "show"}).out, test::read_file(test::fixture("cli_chain_show.json")));
    EXPECT_EQ(pact({"history", v1}).out, test::read_file(test::fixture("cli_history.json")));
}

TEST_F(CliTest, DomainAndUsageErrors) {
    const CliRun g = pact({"group", "create", "--member", "alice"});
    const std::string gid = g.doc()["id"];
    const CliRun p = pact({"propose", "--group", gid, "--text", "Solo"});
    const std::string pid = p.doc()["id"];
    EXPECT_EQ(pact({"vote", "--proposal", pid, "--as", "alice", "--yes"}).code, 0);
    const CliRun dup = pact({"vote", "--proposal", pid, "--as", "alice", "--yes"});
    EXPECT_EQ(dup.code, 1);
    EXPECT_EQ(dup.doc()["error"]["code"], "ALREADY_VOTED");

    EXPECT_EQ(pact({"frobnicate"}).code, 2);
    EXPECT_EQ(pact({"vote", "--proposal", pid}).code, 2);
    EXPECT_EQ(pact({"history", std::string(32, 'b')}).code, 1);
}

TEST_F(CliTest, VoteWithDifferentTextRejects) {
    const CliRun g = pact({"group", "create", "--member", "alice", "--member", "bob"});
    const std::string gid = g.doc()["id"];
    const std::string pid = pact({"propose", "--group", gid, "--text", "Deal"}).doc()["id"];
    const CliRun v = pact({"vote", "--proposal", pid, "--as", "bob", "--yes", "--file",
                        file("mine.txt", "Deal!\n")});
    EXPECT_EQ(v.code, 0) << v.out;
    EXPECT_EQ(v.doc()["status"], "rejected");
    EXPECT_EQ(pact({"finalize", "--proposal", pid}).code, 1);
}

TEST_F(CliTest, SimRunJsonAfterSubcommand) {
    const CliRun r = pact({"sim", "run", "--miners", "5", "--noise", "0.10", "--requests", "20000",
                        "--seed", "42", "--json"},
                       false);
    ASSERT_EQ(r.code, 0) << r.err;
    const json j = r.doc();
    EXPECT_NEAR(j["analytic_failure_probability"].get<double>(), 0.00856, 1e-12);
    EXPECT_EQ(j["config"]["requests"], 20000);
    EXPECT_EQ(j["config"]["seed"], 42);
}

TEST_F(CliTest, SimRunWritesCsv) {
    const std::string csv = (dir / "log.csv").string();
    const CliRun r = pact({"sim", "run", "--miners", "3", "--requests", "10", "--csv", csv});
    EXPECT_EQ(r.code, 0);
    const std::string content = test::read_file(csv);
    EXPECT_EQ(content.substr(0, content.find('\n')), "request_id,valid,yes_count,accepted");
    EXPECT_EQ(std::count(content.begin(), content.end(), '\n'), 11);
}

TEST_F(CliTest, WalletKeysArePrivate) {
    pact({"group", "create", "--member", "alice"});
    const auto key = data / "wallet" / "alice.key";
    ASSERT_TRUE(std::filesystem::exists(key));
    const auto perms = std::filesystem::status(key).permissions();
    EXPECT_EQ(perms & (std::filesystem::perms::group_all | std::filesystem::perms::others_all),
              std::filesystem::perms::none);
}
