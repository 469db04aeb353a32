#include "cave/cli.hpp"

#include <iostream>

int main(int argc, char** argv)
{
    return cave::cli::main(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
