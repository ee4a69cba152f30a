// SPDX-License-Identifier: MIT
#include <iostream>
#include <string>
#include <vector>

#include "cli.hpp"

int main(int argc, char** argv) {
    const std::vector<std::string> args(argv + 1, argv + argc);
    return wrate::cli::run(args, std::cout, std::cerr);
}
