#include <iostream>

#include "oeb/cli.hpp"

int main(int argc, char** argv) { return oeb::cli::run(argc, argv, std::cout, std::cerr); }
