#include "csot/cli.hpp"

int main(int argc, char** argv) { return csot::cli::run_cli(argc, argv); }
