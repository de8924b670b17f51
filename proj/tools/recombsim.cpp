#include "recomb/cli.hpp"

int main(int argc, char** argv) { return recomb::cli::main(argc, argv); }
