#include "pact/cli.hpp"

#include <iostream>

int main(int argc, char** argv) {
    return pact::run_cli(argc, argv, std::cout, std::cerr);
}
