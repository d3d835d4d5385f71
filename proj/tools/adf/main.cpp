#include <cstdlib>
#include <iostream>

#include <unistd.h>

#include "cli.hpp"

int main(int argc, char** argv) {
  const bool color = std::getenv("ADF_NO_COLOR") == nullptr && isatty(STDOUT_FILENO);
  return adf::cli::run(argc, argv, std::cout, std::cerr, color);
}
