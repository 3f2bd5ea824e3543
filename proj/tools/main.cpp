#include <string>
#include <vector>

#include "clipita/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return clipita::cli::run(args);
}
