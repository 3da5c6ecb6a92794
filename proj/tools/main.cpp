#include "sweep/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return sweep::cli_main(argc, argv, std::cout, std::cerr); }
