#pragma once

#include <cmath>
#include <cstdint>
#include <string_view>

namespace symbio {

// Small self-contained generator (splitmix64 core). We roll our own so that
// every stream is bit-reproducible across platforms and standard library
// versions; std:: distributions do not guarantee that.
class Rng {
public:
    explicit Rng(uint64_t seed) : state_(seed) {}

    uint64_t next_u64() {
        state_ += 0x9e3779b97f4a7c15ull;
        uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    // uniform in [0,1), 53 bits
    double next_double() { return double(next_u64() >> 11) * 0x1.0p-53; }

    // uniform in {0, ..., n-1}, unbiased
    uint64_t next_below(uint64_t n) {
        uint64_t threshold = (0 - n) % n;
        for (;;) {
            uint64_t r = next_u64();
            if (r >= threshold) return r % n;
        }
    }

    int next_int(int lo, int hi) {  // inclusive range
        return lo + int(next_below(uint64_t(hi - lo + 1)));
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

    bool bernoulli(double p) { return next_double() < p; }

    // Box-Muller; second value of the pair is kept for the next call.
    double normal(double mean = 0.0, double sigma = 1.0) {
        if (have_spare_) {
            have_spare_ = false;
            return mean + sigma * spare_;
        }
        double u1 = 0.0;
        while (u1 == 0.0) u1 = next_double();
        double u2 = next_double();
        double mag = std::sqrt(-2.0 * std::log(u1));
        double two_pi = 6.283185307179586476925286766559;
        spare_ = mag * std::sin(two_pi * u2);
        have_spare_ = true;
        return mean + sigma * mag * std::cos(two_pi * u2);
    }

private:
    uint64_t state_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

inline uint64_t fnv1a64(std::string_view s) {
    uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    return h;
}

// Named stream derivation: every random consumer gets its seed as
// derive_seed(base, component_tag, index), so one base seed reproduces the
// whole run and streams stay independent of scheduling / thread count.
inline uint64_t derive_seed(uint64_t base, std::string_view tag, uint64_t index = 0) {
    Rng mixer(base ^ fnv1a64(tag) ^ (index * 0x9e3779b97f4a7c15ull));
    mixer.next_u64();
    return mixer.next_u64();
}

}  // namespace symbio
