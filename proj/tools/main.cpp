#include <iostream>

#include "bemkl/cli.hpp"

int main(int argc, char** argv) { return bemkl::run_cli(argc, argv, std::cout, std::cerr); }
