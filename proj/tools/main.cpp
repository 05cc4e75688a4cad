#include "unpaired_sr/cli.hpp"

int main(int argc, char** argv) { return unpaired_sr::run_cli(argc, argv); }
