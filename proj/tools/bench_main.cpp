#include "pimhe/bench.hpp"

int main(int argc, char** argv) {
    return pimhe::bench::run_cli(argc, argv);
}
