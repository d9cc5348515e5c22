#include "solitonsim/cli.hpp"

int main(int argc, char** argv) { return solitonsim::cli::main_entry(argc, argv); }
