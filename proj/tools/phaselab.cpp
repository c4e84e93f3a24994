#include "cli.hpp"

int main(int argc, char** argv) {
  return phaselab::cli::run(std::vector<std::string>(argv + 1, argv + argc));
}
