#include <iostream>
#include <string>
#include <vector>

#include "uniclip_cli/cli.hpp"

int main(int argc, char** argv) {
  return uniclip::cli::run(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
