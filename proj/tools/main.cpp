#include <iostream>

#include "dqops/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return dqops::run_cli(args, std::cout, std::cerr);
}
