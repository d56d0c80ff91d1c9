#include "marmor/harness/cli.hpp"

int main(int argc, char** argv) { return marmor::harness::cli_main(argc, argv); }
