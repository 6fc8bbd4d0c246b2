#include <iostream>

#include "manin/cli/commands.hpp"

int main(int argc, char** argv) { return manin::cli::main_entry(argc, argv, std::cout, std::cerr); }
