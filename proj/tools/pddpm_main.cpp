#include "pddpm/cli.hpp"

int main(int argc, char** argv) { return pddpm::run_cli(argc, argv); }
