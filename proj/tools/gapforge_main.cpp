#include "gapforge/cli.hpp"

int main(int argc, char** argv) { return gapforge::run_cli(argc, argv); }
