#include <iostream>

#include "sgm/commands.hpp"

int main(int argc, char** argv) {
  return sgm::run_cli(argc, argv, std::cout, std::cerr);
}
