#include <string>
#include <vector>

#include "dnlslab/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return dnlslab::cli_main(args);
}
