#include "nflab/config.hpp"

int main(int argc, char** argv) { return nflab::cli_main(argc, argv); }
