#include "cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return steinkd::cli::run(argc, argv, std::cout, std::cerr); }
