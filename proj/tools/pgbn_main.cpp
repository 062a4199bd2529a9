#include "pgbn/cli.hpp"

int main(int argc, char** argv) { return pgbn::run_cli(argc, argv); }
