#include "colbreak/cli.hpp"

int main(int argc, char** argv) { return colbreak::cli_main(argc, argv); }
