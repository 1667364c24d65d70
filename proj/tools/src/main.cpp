#include <iostream>

#include "qcb_cli/app.hpp"

int main(int argc, char** argv) {
  return qcb::cli::run(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
