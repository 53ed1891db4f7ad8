#include "eigenrank/cli.hpp"

int main(int argc, char** argv) {
  return eigenrank::cli_dispatch(argc, argv);
}
