#include "ucn/cli.hpp"

int main(int argc, char** argv) { return ucn::run_cli(argc, argv); }
