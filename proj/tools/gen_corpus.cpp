// Writes a deterministic synthetic text corpus (see data/README.md).
// Usage: abbie-gen-corpus <out-path> [bytes] [seed]

#include <cstdlib>
#include <fstream>
#include <iostream>

#include "abbie/textgen.hpp"

int main(int argc, char** argv) {
    if (argc < 2) {
        std::cerr << "usage: abbie-gen-corpus <out-path> [bytes=8000000] [seed=1]\n";
        return 3;
    }
    const size_t bytes = argc > 2 ? static_cast<size_t>(std::atoll(argv[2])) : 8000000;
    const uint64_t seed = argc > 3 ? static_cast<uint64_t>(std::atoll(argv[3])) : 1;
    std::ofstream f(argv[1], std::ios::binary | std::ios::trunc);
    if (!f) {
        std::cerr << "abbie-gen-corpus: cannot write " << argv[1] << "\n";
        return 4;
    }
    f << abbie::generate_corpus(seed, bytes);
    std::cout << "wrote " << bytes << " bytes to " << argv[1] << " (seed " << seed << ")\n";
    return 0;
}
