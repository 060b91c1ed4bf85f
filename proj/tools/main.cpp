#include <string>
#include <vector>

#include "rankshot/cli.hpp"

int main(int argc, char** argv) {
  return rankshot::cli::run(std::vector<std::string>(argv + 1, argv + argc));
}
