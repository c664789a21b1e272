#include <iostream>
#include <string>
#include <vector>

#include "infomaxda/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return infomaxda::run_cli(args, std::cout, std::cerr);
}
