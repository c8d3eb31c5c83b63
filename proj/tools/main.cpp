#include <iostream>

#include "cli.hpp"

int main(int argc, char** argv)
{
    return pgrecruit::cli::run(argc, argv, std::cout, std::cerr);
}
