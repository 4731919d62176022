#include <iostream>

#include "mekit/cli.hpp"

int main(int argc, char** argv) {
    return mekit::run_cli(std::vector<std::string>(argv, argv + argc), std::cout, std::cerr);
}
