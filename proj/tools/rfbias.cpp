#include <string>
#include <vector>

#include "rfbias/cli.hpp"

int main(int argc, char** argv) {
  return rfbias::cli::run_cli(std::vector<std::string>(argv + 1, argv + argc));
}
