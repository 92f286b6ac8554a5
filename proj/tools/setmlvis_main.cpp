#include <iostream>

#include "setmlvis/cli.hpp"

int main(int argc, char** argv) { return setmlvis::run_cli(argc, argv, std::cout, std::cerr); }
