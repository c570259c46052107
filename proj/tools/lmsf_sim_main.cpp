#include "lmsf/cli.hpp"

int main(int argc, char** argv) { return lmsf::run_cli(argc, argv); }
