#include <string>
#include <vector>

#include "gradbound/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return gradbound::cli::run(args);
}
