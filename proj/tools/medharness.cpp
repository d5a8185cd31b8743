#include <iostream>

#include "medharness/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return medharness::cli::dispatch(args, std::cout, std::cerr);
}
