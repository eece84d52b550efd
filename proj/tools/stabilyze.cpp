#include "stabilyze/cli.hpp"

int main(int argc, char** argv) {
    return stabilyze::cli_run(std::vector<std::string>(argv + 1, argv + argc));
}
