#include <iostream>

#include "mpseudo/cli.hpp"

int main(int argc, char** argv)
{
    return mpseudo::cli::cli_main(argc, argv, std::cout, std::cerr);
}
