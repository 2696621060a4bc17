#include <iostream>

#include "thermolim/cli/run.hpp"

int main(int argc, char** argv)
{
    return thermolim::cli::run(argc, argv, std::cout, std::cerr);
}
