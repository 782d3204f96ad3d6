#include <iostream>
#include <string>
#include <vector>

#include "lsft/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return lsft::cli_dispatch(args, std::cout, std::cerr);
}
