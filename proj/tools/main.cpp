#include "mrsig/cli.hpp"

int main(int argc, char** argv) { return mrsig::cli::run(argc, argv); }
