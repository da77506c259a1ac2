#include <iostream>
#include <string>
#include <vector>

#include "shiftcal/cli.h"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return shiftcal::run_cli(args, std::cout, std::cerr);
}
