#include <iostream>

#include "ptflat/cli.hpp"

int main(int argc, char** argv) { return ptflat::run_cli(argc, argv, std::cout, std::cerr); }
