#include <vector>

#include "szn/cli.hpp"

int main(int argc, char** argv) {
    return szn::cli_run(std::vector<std::string>(argv + 1, argv + argc));
}
