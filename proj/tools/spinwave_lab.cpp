#include <iostream>

#include "spinwave/cli.hpp"

int main(int argc, char** argv) { return spinwave::lab::run_cli(argc, argv, std::cout, std::cerr); }
