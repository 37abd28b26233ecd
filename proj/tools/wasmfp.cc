#include <iostream>
#include <string>
#include <vector>

#include "wasmfp/cli.h"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return wasmfp::run_cli(args, std::cin, std::cout, std::cerr);
}
