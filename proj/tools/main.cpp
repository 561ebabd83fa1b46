#include "svdd/cli.hpp"

int main(int argc, char** argv) { return svdd::run_cli(argc, argv); }
