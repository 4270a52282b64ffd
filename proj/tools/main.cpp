#include <iostream>

#include "anovakrr/cli.hpp"

int main(int argc, char** argv) { return anovakrr::run_cli(argc, argv, std::cout, std::cerr); }
