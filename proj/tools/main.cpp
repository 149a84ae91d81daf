#include <iostream>

#include "ionwave/cli.hpp"

int main(int argc, char** argv) { return ionwave::run_cli(argc, argv, std::cout, std::cerr); }
