#include <iostream>

#include "chainscat_cli/app.hpp"

int main(int argc, char** argv) { return chainscat::cli::run_cli(argc, argv, std::cout, std::cerr); }
