#include "cli.hpp"

int main(int argc, char** argv) { return safs::cli::run(argc, argv); }
