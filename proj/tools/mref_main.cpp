#include <iostream>

#include "mref/cli/cli.hpp"

int main(int argc, char** argv) {
  return mref::cli::run_cli(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
