#include <iostream>
#include <string>
#include <vector>

#include "mgparse/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return mgparse::cli::run(args, std::cout, std::cerr);
}
