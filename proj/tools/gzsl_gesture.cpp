#include "gzsl/commands.hpp"

#include <iostream>

int main(int argc, char** argv) { return gzsl::run_cli(argc, argv, std::cout, std::cerr); }
