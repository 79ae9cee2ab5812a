#include "abbie/rng.hpp"

#include <cmath>
#include <sstream>

#include "abbie/errors.hpp"

namespace abbie {

double Prng::gauss() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u1 = uniform();
    if (u1 <= 0.0) u1 = 0x1.0p-53;
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * 3.14159265358979323846 * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
}

uint64_t Prng::uniform_int(uint64_t n) {
    if (n == 0) throw UsageError("uniform_int(0)");
    const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t x = eng_();
    while (x >= limit) x = eng_();
    return x % n;
}

std::string Prng::serialize() const {
    std::ostringstream os;
    os << eng_ << " " << (has_spare_ ? 1 : 0) << " " << std::hexfloat << spare_;
    return os.str();
}

void Prng::deserialize(const std::string& s) {
    std::istringstream is(s);
    int spare_flag = 0;
    is >> eng_ >> spare_flag >> std::hexfloat >> spare_;
    if (is.fail()) throw FormatError("malformed rng state string");
    has_spare_ = spare_flag != 0;
}

uint64_t mix_seed(uint64_t seed, uint64_t salt) {
    uint64_t z = seed + 0x9E3779B97F4A7C15ull * (salt + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

}  // namespace abbie
