#include <iostream>

#include "trires_cli/cli.hpp"

int main(int argc, char** argv) { return trires::cli::run(argc, argv, std::cout, std::cerr); }
