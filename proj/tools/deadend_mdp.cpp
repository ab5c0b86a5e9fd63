#include <iostream>
#include <string>
#include <vector>

#include "deadend/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return deadend::run_cli(args, std::cout, std::cerr);
}
