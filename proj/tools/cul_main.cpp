#include "cul/cli.hpp"

int main(int argc, char** argv) { return cul::cli::run_command(argc, argv); }
