#include <iostream>
#include <string>
#include <vector>

#include "token_painter/cli.hpp"

int main(int argc, char** argv) {
  const std::vector<std::string> args(argv, argv + argc);
  return tp::cli::run(args, std::cout, std::cerr);
}
