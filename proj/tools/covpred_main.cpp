#include "covpred/cli.hpp"

int main(int argc, char** argv) { return covpred::cli::main_entry(argc, argv); }
