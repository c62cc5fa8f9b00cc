#include "principles/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return principles::run_cli(argc, argv, std::cout, std::cerr); }
