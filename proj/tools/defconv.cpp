#include "defconv/cli.hpp"

int main(int argc, char** argv) { return defconv::cli::dispatch(argc, argv); }
