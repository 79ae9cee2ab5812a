#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

namespace abbie {

// Deterministic random stream. The gaussian path is an explicit Box-Muller on
// top of the raw mt19937_64 bits rather than std::normal_distribution, so the
// byte-for-byte sequence is pinned by this file and not by the stdlib vendor.
// State (engine + cached spare) round-trips through serialize()/deserialize(),
// which checkpoints rely on for exact training resume.
class Prng {
public:
    explicit Prng(uint64_t seed) : eng_(seed) {}

    uint64_t next_u64() { return eng_(); }

    // Uniform in [0, 1), 53-bit resolution.
    double uniform() {
        return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
    }

    // Standard normal via Box-Muller; second sample of each pair is cached.
    double gauss();

    // Standard normal rejected outside [-3, 3].
    double gauss_trunc3() {
        double z = gauss();
        while (z < -3.0 || z > 3.0) z = gauss();
        return z;
    }

    // Unbiased integer in [0, n) by rejection.
    uint64_t uniform_int(uint64_t n);

    template <class T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = static_cast<size_t>(uniform_int(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    std::string serialize() const;
    void deserialize(const std::string& s);

private:
    std::mt19937_64 eng_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

// Stable seed derivation for named substreams (e.g. per-position noise).
uint64_t mix_seed(uint64_t seed, uint64_t salt);

}  // namespace abbie
