#include <iostream>

#include "mergo/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return mergo::cli::dispatch(args, std::cout, std::cerr);
}
