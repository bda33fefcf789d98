#include "maqed/cli.hpp"

int main(int argc, char **argv) { return maqed::run_cli(argc, argv); }
