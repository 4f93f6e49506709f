#pragma once

// In-process miner network. Miners vote on block validity; some of them lie.
// run_simulation measures how often the 51% quorum gets the answer wrong and
// compares it with the exact binomial tail.

#include "pact/ledger.hpp"

#include <json.hpp>

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pact {

enum class MinerBehavior { Honest, BernoulliInverter, AlwaysInverter };

struct MinerProfile {
    std::string id;
    MinerBehavior behavior = MinerBehavior::Honest;
    /// Inversion probability for BernoulliInverter.
    double p = 0.0;

    static MinerProfile honest(std::string id) { return {std::move(id), MinerBehavior::Honest, 0.0}; }
    static MinerProfile bernoulli(std::string id, double p);
    static MinerProfile always_inverter(std::string id) {
        return {std::move(id), MinerBehavior::AlwaysInverter, 1.0};
    }
};

enum class AdversaryMode { PerRequestBernoulli, FixedSubset };

std::string_view to_string(AdversaryMode mode) noexcept;
AdversaryMode parse_adversary_mode(std::string_view s);

struct SimConfig {
    std::size_t miner_count = 5;
    double noise_p = 0.10;
    AdversaryMode adversary_mode = AdversaryMode::PerRequestBernoulli;
    /// Always-inverting miners in FixedSubset mode; the rest invert with noise_p.
    std::size_t adversaries = 0;
    std::uint64_t requests = 1000;
    double valid_fraction = 1.0;
    std::size_t difficulty = 0;
    std::uint64_t seed = 0;
    /// Build, mine and verify real blocks instead of injecting validity.
    bool mine_blocks = false;
    unsigned workers = 1;

    /// Throws Error(InvalidArgument) describing the first bad field.
    void validate() const;
};

struct RequestRecord {
    std::uint64_t request_id = 0;
    bool valid = false;
    std::size_t yes_count = 0;
    bool accepted = false;

    friend bool operator==(const RequestRecord&, const RequestRecord&) = default;
};

struct SimReport {
    SimConfig config;
    std::uint64_t valid_requests = 0;
    std::uint64_t invalid_requests = 0;
    std::uint64_t truthful_failures = 0;
    std::uint64_t adversarial_acceptances = 0;
    double truthful_request_failure_rate = 0.0;
    double adversarial_acceptance_rate = 0.0;
    double analytic_failure_probability = 0.0;
    double analytic_adversarial_acceptance = 0.0;
    std::vector<RequestRecord> log;
};

/// Seedable generator with independent per-request substreams, so results do
/// not depend on how requests are spread over threads.
class SimRng {
public:
    SimRng(std::uint64_t seed, std::uint64_t stream);

    /// Uniform double in [0, 1) built from the top 53 bits of one draw.
    double uniform();
    std::uint64_t next() { return engine_(); }

private:
    std::mt19937_64 engine_;
};

bool miner_verdict(const MinerProfile& profile, bool true_validity, double rng_draw) noexcept;

struct ConsensusOutcome {
    std::size_t yes_count = 0;
    bool accepted = false;
};

/// One uniform draw per miner, in miner order, whatever its behaviour.
ConsensusOutcome submit_for_consensus(std::span<const MinerProfile> miners, bool block_validity,
                                      SimRng& rng);

/// Miner roster a config describes.
std::vector<MinerProfile> build_miners(const SimConfig& config);

SimReport run_simulation(const SimConfig& config);

/// P[valid block rejected] = P[X >= M - T + 1], X ~ Binomial(M, p), T the quorum.
double analytic_failure_probability(std::size_t miner_count, double p);

/// P[invalid block accepted] = P[X >= T].
double analytic_acceptance_of_invalid(std::size_t miner_count, double p);

/// P[X >= k] for X ~ Binomial(n, p), by direct summation.
double binomial_upper_tail(std::size_t n, double p, std::size_t k);

/// `request_id,valid,yes_count,accepted` header plus one row per request.
std::string report_csv(const SimReport& report);

/// Config echo, counts, rates and oracle values.
nlohmann::ordered_json report_summary(const SimReport& report);

SimConfig sim_config_from_json(const nlohmann::json& j);

}  // namespace pact
