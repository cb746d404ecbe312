#include <iostream>

#include "gntm/cli.hpp"

int main(int argc, char** argv) { return gntm::cli::run(argc, argv, std::cout, std::cerr); }
