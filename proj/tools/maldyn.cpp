#include "maldyn/cli.hpp"

int main(int argc, char** argv) { return maldyn::cli::run(argc, argv); }
