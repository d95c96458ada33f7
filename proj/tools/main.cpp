#include <string>
#include <vector>

#include "ibstress/commands.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return ibstress::run_command(args);
}
