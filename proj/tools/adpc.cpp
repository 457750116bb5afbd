#include "adpc/cli/cli.h"

#include <iostream>

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv + 1, argv + argc);
  return adpc::cli::run(args, std::cout, std::cerr, adpc::cli::environment_from_process());
}
