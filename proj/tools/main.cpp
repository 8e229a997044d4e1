#include "commands.hpp"

int main(int argc, char** argv) {
  return voxkit::cli::run(argc, argv, std::cin, std::cout, std::cerr);
}
