#include <vector>

#include "tfsep/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return tfsep::cli::run(args);
}
