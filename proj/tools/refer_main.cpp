#include <iostream>

#include "refer/cli.hpp"

int main(int argc, char** argv) {
    refer::SystemClock clock;
    refer::cli::Env env{clock, std::cout, std::cerr};
    return refer::cli::run(std::vector<std::string>(argv + 1, argv + argc), env);
}
