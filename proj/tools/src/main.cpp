#include "nesua_cli/commands.hpp"

int main(int argc, char** argv) { return nesua::cli::run(argc, argv); }
