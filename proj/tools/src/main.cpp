#include "clustfolio/cli/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return clustfolio::cli::run(argc, argv, std::cout, std::cerr); }
