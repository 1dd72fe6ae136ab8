#include <iostream>
#include <string>
#include <vector>

#include "hrgc/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return hrgc::run_cli(args, std::cout, std::cerr);
}
