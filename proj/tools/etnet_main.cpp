#include "etnet/commands.hpp"

int main(int argc, char** argv) { return etnet::run_cli(argc, argv); }
