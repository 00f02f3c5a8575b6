#include <iostream>
#include <string>
#include <vector>

#include "ctxnmt/driver.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return ctxnmt::run_cli(args, std::cout, std::cerr);
}
