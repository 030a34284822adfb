#include "cli.hpp"

int main(int argc, char** argv) { return microgrid::cli::run(argc, argv); }
