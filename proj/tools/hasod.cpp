#include <iostream>
#include <string>
#include <vector>

#include "hasod/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return hasod::run_cli(args, std::cout, std::cerr);
}
