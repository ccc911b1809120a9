#include "qctl/cli.hpp"

int main(int argc, char ** argv) { return qctl::cli::run(argc, argv); }
