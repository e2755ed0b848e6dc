#include <iostream>

#include "kfp/cli.hpp"

int main(int argc, char** argv) { return kfp::cli::run(argc, argv, std::cout, std::cerr); }
