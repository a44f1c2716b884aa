#include "renv/cli.hpp"

int main(int argc, char** argv) { return renv::run_main(argc, argv); }
