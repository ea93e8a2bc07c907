#include <iostream>

#include "pfsim/run.hpp"

int main(int argc, char** argv) { return pfsim::cli_main(argc, argv, std::cout, std::cerr); }
