#include <iostream>

#include "nlsparse/cli.hpp"

int main(int argc, char** argv) { return nlsparse::run_cli(argc, argv, std::cout, std::cerr); }
