#include "lpmkl/cli.hpp"

int main(int argc, char** argv) { return lpmkl::cli::run(argc, argv); }
