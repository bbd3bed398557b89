#include <iostream>

#include "chestseg/cli.hpp"

int main(int argc, char** argv) { return chestseg::run_cli(argc, argv, std::cout, std::cerr); }
