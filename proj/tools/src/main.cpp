#include "corrlab_cli/cli.hpp"

int main(int argc, char** argv) { return corrlab::cli::run_cli(argc, argv); }
