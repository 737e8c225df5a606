#include <iostream>
#include <string>
#include <vector>

#include "dcgen/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return dcgen::cli::run(std::move(args), std::cout, std::cerr);
}
