// HTTP service. Listen address from --addr / PACT_ADDR, data directory from
// --data-dir / PACT_DATA_DIR.

#include "pact/service.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
    CLI::App app{"pactd: contract consensus HTTP service", "pactd"};
    std::string addr = "127.0.0.1:8080";
    std::string data_dir = "pact-data";
    std::size_t difficulty = 3;
    std::size_t miners = 5;
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> now;
    app.add_option("--addr", addr, "host:port to listen on")->envname("PACT_ADDR");
    app.add_option("--data-dir", data_dir)->envname("PACT_DATA_DIR");
    app.add_option("--difficulty", difficulty, "Leading zero hex digits (new data dirs only)");
    app.add_option("--miners", miners, "Miner count (new data dirs only)");
    app.add_option("--seed", seed, "Seed for owner keys and miner draws");
    app.add_option("--now", now, "Fixed clock for reproducible test runs");
    CLI11_PARSE(app, argc, argv);

    const auto colon = addr.rfind(':');
    if (colon == std::string::npos) {
        std::cerr << "--addr must be host:port\n";
        return 2;
    }
    const std::string host = addr.substr(0, colon);
    const int port = std::stoi(addr.substr(colon + 1));

    try {
        pact::EngineOptions opts;
        opts.data_dir = data_dir;
        opts.config.difficulty = difficulty;
        opts.config.miners = miners;
        opts.seed = seed;
        opts.clock = now ? pact::fixed_clock(*now) : pact::system_clock();
        pact::Engine engine(std::move(opts));
        pact::Api api(engine);
        std::cerr << "pactd listening on " << host << ':' << port << " (data " << data_dir
                  << ")\n";
        if (!pact::serve(api, host, port)) {
            std::cerr << "cannot listen on " << addr << '\n';
            return 1;
        }
    } catch (const pact::Error& e) {
        std::cerr << "error: " << pact::to_string(e.code()) << ": " << e.what() << '\n';
        return 1;
    }
    return 0;
}
