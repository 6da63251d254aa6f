#include <iostream>

#include "heatpinn/cli/commands.hpp"

int main(int argc, char** argv) { return heatpinn::cli::run(argc, argv, std::cout, std::cerr); }
