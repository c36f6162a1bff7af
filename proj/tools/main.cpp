#include <iostream>

#include "npprompt/cli.hpp"

int main(int argc, char** argv) {
    return npprompt::run_cli(argc, argv, std::cout, std::cerr);
}
