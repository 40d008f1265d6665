#include "adalam/cli.hpp"

int main(int argc, char** argv) { return adalam::cli_main(argc, argv); }
