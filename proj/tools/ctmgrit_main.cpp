#include "ctmg/cli.hpp"

int main(int argc, char** argv) {
  return ctmg::cli_main({argv + 1, argv + argc});
}
