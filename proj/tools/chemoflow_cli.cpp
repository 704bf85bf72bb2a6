#include <iostream>
#include <string>
#include <vector>

#include "chemoflow/cli.hpp"

int main(int argc, char** argv)
{
    std::vector<std::string> args(argv, argv + argc);
    return chemoflow::run_command(args, std::cout, std::cerr);
}
