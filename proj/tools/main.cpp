#include <iostream>
#include <string>
#include <vector>

#include "zsmeta/cli/commands.h"

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv + 1, argv + argc);
  return zsmeta::cli::run_cli(args, std::cout, std::cerr);
}
