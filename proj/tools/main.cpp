#include "cli.hpp"

int main(int argc, char** argv) { return qasym::cli::dispatch(argc, argv); }
