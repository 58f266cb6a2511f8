#include <iostream>

#include "skipstep/cli.hpp"

int main(int argc, char** argv) { return skipstep::run_cli(argc, argv, std::cout, std::cerr); }
