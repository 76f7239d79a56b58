#include <cpmc/cli.hpp>

#include <iostream>

int main(int argc, char** argv) { return cpmc::run_cli(argc, argv, std::cout, std::cerr); }
