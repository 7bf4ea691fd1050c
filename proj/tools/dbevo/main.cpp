#include <iostream>

#include "dbevo/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return dbevo::run_cli(args, std::cout, std::cerr);
}
