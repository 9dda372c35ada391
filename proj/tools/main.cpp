#include <iostream>

#include "chemofront/cli.hpp"

int main(int argc, char** argv) { return chemofront::cli_main(argc, argv, std::cout, std::cerr); }
