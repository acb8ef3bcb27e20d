#include "dsaudit/cli.hpp"

int main(int argc, char** argv) { return dsaudit::run_cli(argc, argv); }
