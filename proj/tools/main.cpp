#include <iostream>

#include "peval/cli.hpp"

int main(int argc, char** argv) { return peval::cli::run(argc, argv, std::cout, std::cerr); }
