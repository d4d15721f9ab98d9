#include "loas/cli.hpp"

int main(int argc, char** argv) { return loas::run_cli(argc, argv); }
