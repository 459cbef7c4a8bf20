#include "sdse/cli.hpp"

int main(int argc, char** argv) { return sdse::cli::main(argc, argv); }
