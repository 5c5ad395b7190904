#include "commands.hpp"

int main(int argc, char** argv) { return abdsde::cli::main_entry(argc, argv); }
