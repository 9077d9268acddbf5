#include <iostream>

#include "s2cubic/cli.hpp"

int main(int argc, char** argv)
{
    return s2c::cli::run(std::vector<std::string>(argv + 1, argv + argc), std::cout, std::cerr);
}
