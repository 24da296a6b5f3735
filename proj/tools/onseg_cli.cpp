#include "onseg/cli.hpp"

int main(int argc, char** argv) { return onseg::cli_main(argc, argv); }
