#include <vector>

#include "topkima/cli.hpp"

int main(int argc, char** argv) {
  return topkima::run_cli(std::vector<std::string>(argv, argv + argc));
}
