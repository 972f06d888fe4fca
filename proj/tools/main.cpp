#include "qrefine/cli.hpp"

int main(int argc, char** argv) { return qrefine::run_cli(argc, argv); }
