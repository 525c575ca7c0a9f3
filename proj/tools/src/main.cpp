#include <iostream>
#include <string>
#include <vector>

#include "vfp_cli/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return vfp::cli::run_cli(args, std::cout, std::cerr);
}
