#include "tqw/cli_io.hpp"

int main(int argc, char** argv) { return tqw::run_cli(argc, argv); }
