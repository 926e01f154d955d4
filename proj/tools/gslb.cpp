#include "gslb/cli.hpp"

int main(int argc, char** argv) { return gslb::cli::run_cli(argc, argv); }
