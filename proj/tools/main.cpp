#include <iostream>

#include "signmap/cli.hpp"

int main(int argc, char** argv) { return signmap::run_cli(argc, argv, std::cout, std::cerr); }
