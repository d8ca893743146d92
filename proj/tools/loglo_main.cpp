#include "loglo/cli.hpp"

int main(int argc, char** argv) { return loglo::run_command(argc, argv); }
