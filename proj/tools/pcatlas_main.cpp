#include <iostream>
#include <string>
#include <vector>

#include "pcatlas/cli.hpp"

int main(int argc, char** argv) {
  pcatlas::cli::apply_thread_env();
  std::vector<std::string> args(argv + 1, argv + argc);
  return pcatlas::cli::run(args, std::cout, std::cerr);
}
