#include "csense/cli.hpp"

int main(int argc, char** argv) { return csense::cli::run_cli(argc, argv); }
