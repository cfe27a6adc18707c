#include "unveil/cli.hpp"

int main(int argc, char** argv) { return unveil::cli_main(argc, argv); }
