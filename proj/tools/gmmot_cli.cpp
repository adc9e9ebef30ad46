#include "cli.hpp"

int main(int argc, char** argv) { return gmmot::cli::run(argc, argv); }
