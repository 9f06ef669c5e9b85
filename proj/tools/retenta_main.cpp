#include <iostream>
#include <string>
#include <vector>

#include "retenta/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv, argv + argc);
    return retenta::cli_dispatch(args, std::cout, std::cerr);
}
