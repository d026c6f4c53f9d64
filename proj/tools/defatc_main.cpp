#include "defatc/cli.hpp"

int main(int argc, char** argv) { return defatc::run_cli(argc, argv); }
