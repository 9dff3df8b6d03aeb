#include <iostream>

#include "imm/cli/commands.hpp"

int main(int argc, char** argv) { return imm::cli::run_cli(argc, argv, std::cout, std::cerr); }
