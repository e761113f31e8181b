#include "dpos/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return dpos::cli_main(argc, argv, std::cout, std::cerr); }
