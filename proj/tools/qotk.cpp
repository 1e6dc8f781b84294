#include "qot/cli.hpp"

int main(int argc, char** argv) { return qot::cli::run(argc, argv); }
