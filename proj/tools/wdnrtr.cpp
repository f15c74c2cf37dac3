#include <vector>
#include <string>

#include "wdn/cli.hpp"

int main(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return wdn::run_cli(args);
}
