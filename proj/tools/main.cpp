#include <iostream>

#include "bpekit/cli.hpp"

int main(int argc, char** argv) {
  std::ios::sync_with_stdio(false);
  return bpekit::cli::run(argc, argv, std::cout, std::cerr);
}
