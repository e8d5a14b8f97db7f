#include <string>
#include <vector>

#include "gxe/pipeline.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return gxe::run_cli(args);
}
