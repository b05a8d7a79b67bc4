#include <iostream>

#include "privgate/cli.hpp"

int main(int argc, char** argv) { return privgate::run_cli(argc, argv, std::cout, std::cerr); }
