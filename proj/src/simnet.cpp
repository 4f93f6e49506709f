#include "pact/simnet.hpp"

#include "pact/error.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <thread>

namespace pact {

MinerProfile MinerProfile::bernoulli(std::string id, double p) {
    if (!(p >= 0.0 && p <= 1.0)) {
        throw Error(ErrorCode::InvalidArgument, "inversion probability must lie in [0, 1]");
    }
    return {std::move(id), MinerBehavior::BernoulliInverter, p};
}

std::string_view to_string(AdversaryMode mode) noexcept {
    return mode == AdversaryMode::FixedSubset ? "fixed_subset" : "per_request_bernoulli";
}

AdversaryMode parse_adversary_mode(std::string_view s) {
    if (s == "per_request_bernoulli") return AdversaryMode::PerRequestBernoulli;
    if (s == "fixed_subset") return AdversaryMode::FixedSubset;
    throw Error(ErrorCode::InvalidArgument,
                "adversary mode must be 'per_request_bernoulli' or 'fixed_subset'");
}

void SimConfig::validate() const {
    auto fail = [](const std::string& msg) { throw Error(ErrorCode::InvalidArgument, msg); };
    if (miner_count < 1) fail("miner_count must be at least 1");
    if (!(noise_p >= 0.0 && noise_p <= 1.0)) fail("noise_p must lie in [0, 1]");
    if (!(valid_fraction >= 0.0 && valid_fraction <= 1.0)) fail("valid_fraction must lie in [0, 1]");
    if (requests < 1) fail("requests must be at least 1");
    if (adversary_mode == AdversaryMode::FixedSubset && adversaries > miner_count) {
        fail("adversaries cannot exceed miner_count");
    }
    if (difficulty > kDigestHexLength) fail("difficulty exceeds digest length");
}

SimRng::SimRng(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream),
                      static_cast<std::uint32_t>(stream >> 32)};
    engine_.seed(seq);
}

double SimRng::uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

bool miner_verdict(const MinerProfile& profile, bool true_validity, double rng_draw) noexcept {
    switch (profile.behavior) {
        case MinerBehavior::Honest: return true_validity;
        case MinerBehavior::AlwaysInverter: return !true_validity;
        case MinerBehavior::BernoulliInverter:
            return rng_draw < profile.p ? !true_validity : true_validity;
    }
    return true_validity;
}

ConsensusOutcome submit_for_consensus(std::span<const MinerProfile> miners, bool block_validity,
                                      SimRng& rng) {
    if (miners.empty()) {
        throw Error(ErrorCode::InvalidArgument, "consensus needs at least one miner");
    }
    ConsensusOutcome out;
    for (const auto& m : miners) {
        if (miner_verdict(m, block_validity, rng.uniform())) ++out.yes_count;
    }
    out.accepted = out.yes_count >= quorum_threshold(miners.size());
    return out;
}

std::vector<MinerProfile> build_miners(const SimConfig& config) {
    std::vector<MinerProfile> miners;
    miners.reserve(config.miner_count);
    const std::size_t fixed =
        config.adversary_mode == AdversaryMode::FixedSubset ? config.adversaries : 0;
    for (std::size_t i = 0; i < config.miner_count; ++i) {
        std::string id = "miner-" + std::to_string(i + 1);
        if (i < fixed) {
            miners.push_back(MinerProfile::always_inverter(std::move(id)));
        } else if (config.noise_p > 0.0) {
            miners.push_back(MinerProfile::bernoulli(std::move(id), config.noise_p));
        } else {
            miners.push_back(MinerProfile::honest(std::move(id)));
        }
    }
    return miners;
}

double binomial_upper_tail(std::size_t n, double p, std::size_t k) {
    if (k == 0) return 1.0;
    if (k > n) return 0.0;
    if (p <= 0.0) return 0.0;
    if (p >= 1.0) return 1.0;
    long double total = 0.0L;
    long double coeff = 1.0L;  // C(n, x), built incrementally
    for (std::size_t x = 0; x <= n; ++x) {
        if (x > 0) coeff = coeff * static_cast<long double>(n - x + 1) / static_cast<long double>(x);
        if (x >= k) {
            total += coeff * std::pow(static_cast<long double>(p), static_cast<long double>(x)) *
                     std::pow(1.0L - static_cast<long double>(p), static_cast<long double>(n - x));
        }
    }
    return static_cast<double>(std::min(total, 1.0L));
}

double analytic_failure_probability(std::size_t miner_count, double p) {
    const std::size_t t = quorum_threshold(miner_count);
    return binomial_upper_tail(miner_count, p, miner_count - t + 1);
}

double analytic_acceptance_of_invalid(std::size_t miner_count, double p) {
    return binomial_upper_tail(miner_count, p, quorum_threshold(miner_count));
}

namespace {

// Oracle values for a roster with `fixed` always-inverters and the remaining
// miners inverting with probability p.
std::pair<double, double> oracle_for(const SimConfig& c) {
    const std::size_t m = c.miner_count;
    const std::size_t t = quorum_threshold(m);
    const std::size_t fixed = c.adversary_mode == AdversaryMode::FixedSubset ? c.adversaries : 0;
    const std::size_t rest = m - fixed;
    const std::size_t need_fail = m - t + 1;
    const double fail = binomial_upper_tail(rest, c.noise_p, need_fail > fixed ? need_fail - fixed : 0);
    const double accept = binomial_upper_tail(rest, c.noise_p, t > fixed ? t - fixed : 0);
    return {fail, accept};
}

// Real blocks: each request mines a block on the current tip; invalid
// requests tamper with the payload after mining.
void run_mined(const SimConfig& c, std::span<const MinerProfile> miners,
               std::vector<RequestRecord>& log) {
    const KeyPair root = generate_keypair(derive_seed("SIM-ROOT\n" + std::to_string(c.seed)));
    Chain chain(root.public_key, c.difficulty);
    KeyPair tip_owner = root;
    for (std::uint64_t r = 0; r < c.requests; ++r) {
        SimRng rng(c.seed, r);
        const bool valid = rng.uniform() < c.valid_fraction;
        const KeyPair owner = generate_keypair(
            derive_seed("SIM-OWNER\n" + std::to_string(c.seed) + "\n" + std::to_string(r)));

        BlockPayload payload;
        payload.contract_id = sha256("SIM-CONTRACT\n" + std::to_string(r)).hex().substr(0, 32);
        payload.contract_hash = sha256("simulated contract " + std::to_string(r));
        payload.signatory_ids = {"sim-signer"};
        payload.owner_pubkey = owner.public_key;
        payload.prev_owner_sig =
            sign(tip_owner.private_key,
                 ownership_message(payload.contract_hash, owner.public_key, chain.tip().hash))
                .hex();
        BlockHeader tmpl = chain.next_template(std::move(payload), r, miners[r % miners.size()].id);
        Block block = mine(tmpl, c.difficulty).block;
        if (!valid) {
            block.header.payload.contract_hash = sha256("forged contract " + std::to_string(r));
        }

        const bool honest_view = verify_block(block, chain.tip(), c.difficulty);
        std::vector<bool> verdicts;
        for (const auto& m : miners) {
            verdicts.push_back(miner_verdict(m, honest_view, rng.uniform()));
        }
        const AppendOutcome out = chain.append_block(block, verdicts);
        const std::size_t yes = out.yes_count;
        if (out.accepted) tip_owner = owner;
        log[r] = RequestRecord{r, valid, yes, out.accepted};
    }
}

}  // namespace

SimReport run_simulation(const SimConfig& config) {
    config.validate();
    const std::vector<MinerProfile> miners = build_miners(config);

    SimReport report;
    report.config = config;
    report.log.resize(config.requests);

    if (config.mine_blocks) {
        run_mined(config, miners, report.log);
    } else {
        auto run_range = [&](std::uint64_t from, std::uint64_t to) {
            for (std::uint64_t r = from; r < to; ++r) {
                SimRng rng(config.seed, r);
                const bool valid = rng.uniform() < config.valid_fraction;
                const ConsensusOutcome out = submit_for_consensus(miners, valid, rng);
                report.log[r] = RequestRecord{r, valid, out.yes_count, out.accepted};
            }
        };
        const unsigned workers = std::max(1u, config.workers);
        if (workers == 1) {
            run_range(0, config.requests);
        } else {
            std::vector<std::jthread> pool;
            const std::uint64_t per = (config.requests + workers - 1) / workers;
            for (unsigned w = 0; w < workers; ++w) {
                const std::uint64_t from = std::min<std::uint64_t>(config.requests, w * per);
                const std::uint64_t to = std::min<std::uint64_t>(config.requests, from + per);
                pool.emplace_back(run_range, from, to);
            }
        }
    }

    for (const auto& rec : report.log) {
        if (rec.valid) {
            ++report.valid_requests;
            if (!rec.accepted) ++report.truthful_failures;
        } else {
            ++report.invalid_requests;
            if (rec.accepted) ++report.adversarial_acceptances;
        }
    }
    if (report.valid_requests) {
        report.truthful_request_failure_rate =
            static_cast<double>(report.truthful_failures) / static_cast<double>(report.valid_requests);
    }
    if (report.invalid_requests) {
        report.adversarial_acceptance_rate = static_cast<double>(report.adversarial_acceptances) /
                                             static_cast<double>(report.invalid_requests);
    }
    std::tie(report.analytic_failure_probability, report.analytic_adversarial_acceptance) =
        oracle_for(config);
    return report;
}

std::string report_csv(const SimReport& report) {
    std::ostringstream out;
    out << "request_id,valid,yes_count,accepted\n";
    for (const auto& r : report.log) {
        out << r.request_id << ',' << (r.valid ? 1 : 0) << ',' << r.yes_count << ','
            << (r.accepted ? 1 : 0) << '\n';
    }
    return out.str();
}

nlohmann::ordered_json report_summary(const SimReport& report) {
    const SimConfig& c = report.config;
    nlohmann::ordered_json cfg;
    cfg["miner_count"] = c.miner_count;
    cfg["noise_p"] = c.noise_p;
    cfg["adversary_mode"] = std::string(to_string(c.adversary_mode));
    cfg["adversaries"] = c.adversaries;
    cfg["requests"] = c.requests;
    cfg["valid_fraction"] = c.valid_fraction;
    cfg["difficulty"] = c.difficulty;
    cfg["seed"] = c.seed;
    cfg["mine_blocks"] = c.mine_blocks;

    nlohmann::ordered_json j;
    j["config"] = cfg;
    j["quorum_threshold"] = quorum_threshold(c.miner_count);
    j["valid_requests"] = report.valid_requests;
    j["invalid_requests"] = report.invalid_requests;
    j["truthful_failures"] = report.truthful_failures;
    j["adversarial_acceptances"] = report.adversarial_acceptances;
    j["truthful_request_failure_rate"] = report.truthful_request_failure_rate;
    j["adversarial_acceptance_rate"] = report.adversarial_acceptance_rate;
    j["analytic_failure_probability"] = report.analytic_failure_probability;
    j["analytic_adversarial_acceptance"] = report.analytic_adversarial_acceptance;
    return j;
}

SimConfig sim_config_from_json(const nlohmann::json& j) {
    SimConfig c;
    try {
        c.miner_count = j.value("miner_count", c.miner_count);
        c.noise_p = j.value("noise_p", c.noise_p);
        if (j.contains("adversary_mode")) {
            c.adversary_mode = parse_adversary_mode(j.at("adversary_mode").get<std::string>());
        }
        c.adversaries = j.value("adversaries", c.adversaries);
        c.requests = j.value("requests", c.requests);
        c.valid_fraction = j.value("valid_fraction", c.valid_fraction);
        c.difficulty = j.value("difficulty", c.difficulty);
        c.seed = j.value("seed", c.seed);
        c.mine_blocks = j.value("mine_blocks", c.mine_blocks);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::InvalidArgument, std::string("bad simulation config: ") + e.what());
    }
    c.validate();
    return c;
}

}  // namespace pact
