#include <iostream>

#include "darkscope/cli.hpp"

int main(int argc, char** argv) { return darkscope::cli::run(argc, argv, std::cout, std::cerr); }
