#include <iostream>

#include <vmeval/cli.hpp>

int main(int argc, char** argv) { return vmeval::cli::run(argc, argv, std::cout, std::cerr); }
