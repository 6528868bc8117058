#include <iostream>

#include "padfuse/cli.hpp"

int main(int argc, char** argv) { return padfuse::run_cli(argc, argv, std::cout, std::cerr); }
