#include "qc/cli.hpp"

int main(int argc, char** argv) { return qc::run_cli(argc, argv); }
