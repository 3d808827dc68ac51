#include "npt/cli.hpp"

int main(int argc, char** argv) { return npt::cli::main(argc, argv); }
