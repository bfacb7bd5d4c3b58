#include <iostream>

#include "ppdl/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return ppdl::cli::run(args, std::cout, std::cerr);
}
