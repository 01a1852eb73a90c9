#include <iostream>

#include "pilotstack/cli/commands.hpp"

int main(int argc, char** argv) { return pilotstack::cli::run_cli(argc, argv, std::cout, std::cerr); }
