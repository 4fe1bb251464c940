#include <iostream>
#include <string>
#include <vector>

#include "kdecomp/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return kdecomp::cli::run(args, std::cout, std::cerr);
}
