#include "deceptlab/cli.hpp"

int main(int argc, char** argv) { return deceptlab::cli::run_cli(argc, argv); }
