#include "storymem/cli.hpp"

int main(int argc, char** argv) { return storymem::cli::run(argc, argv); }
