#include "sitstd/cli.hpp"

int main(int argc, char** argv) { return sitstd::cli_run(argc, argv); }
