#include "evtwin/cli/run.hpp"

int main(int argc, char** argv) { return evtwin::cli::run(argc, argv); }
