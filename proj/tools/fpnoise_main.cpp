#include <string>
#include <vector>

#include "fpnoise/cli.hpp"

int main(int argc, char** argv) {
    return fpnoise::cli_main(std::vector<std::string>(argv + 1, argv + argc));
}
