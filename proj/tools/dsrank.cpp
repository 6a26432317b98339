#include <dsrank/cli.hpp>

int main(int argc, char **argv) { return dsrank::cli_main(argc, argv); }
