#include "obsim/cli.hpp"

int main(int argc, char** argv) { return obsim::cli_main(argc, argv); }
