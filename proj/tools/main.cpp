#include "fracfga/harness.hpp"

int main(int argc, char** argv) { return fracfga::cli_main(argc, argv); }
