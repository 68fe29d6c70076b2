#include "cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return mwlab::run_cli(argc, argv, std::cout, std::cerr); }
