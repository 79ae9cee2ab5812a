// Writes a synthetic multiple-choice task file (one JSON record per line).
// Usage: abbie-gen-task <out-path> [items=40] [choices=4] [seed=1]

#include <cstdlib>
#include <iostream>

#include "abbie/textgen.hpp"

int main(int argc, char** argv) {
    if (argc < 2) {
        std::cerr << "usage: abbie-gen-task <out-path> [items=40] [choices=4] [seed=1]\n";
        return 3;
    }
    const int64_t items = argc > 2 ? std::atoll(argv[2]) : 40;
    const int64_t choices = argc > 3 ? std::atoll(argv[3]) : 4;
    const uint64_t seed = argc > 4 ? static_cast<uint64_t>(std::atoll(argv[4])) : 1;
    abbie::save_mc_task(argv[1], abbie::generate_mc_task(seed, items, choices));
    std::cout << "wrote " << items << " items (" << choices << " choices) to " << argv[1] << "\n";
    return 0;
}
