#include <iostream>

#include "trackgp/cli/commands.hpp"

int main(int argc, char** argv) { return trackgp::cli::run(argc, argv, std::cout, std::cerr); }
