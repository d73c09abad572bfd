#pragma once

#include <cstdint>

namespace pimhe {

// SplitMix64: seedable, splittable, identical output on every platform.
// Children are derived with a domain tag so each sampled object records a
// reproducible seed lineage (root seed + tag path).
class Prng {
public:
    explicit Prng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        state_ += 0x9E3779B97F4A7C15ull;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    // Independent child stream; does not advance this stream.
    Prng child(std::uint64_t tag) const {
        return Prng(scramble(state_ + (2 * tag + 1) * 0x9E3779B97F4A7C15ull));
    }

    // Uniform in [0, bound) by masked rejection; bound >= 1.
    std::uint64_t below(std::uint64_t bound) {
        if (bound <= 1) return 0;
        int bits = 64 - __builtin_clzll(bound - 1);
        std::uint64_t mask = (bits >= 64) ? ~0ull : ((1ull << bits) - 1);
        for (;;) {
            std::uint64_t r = next() & mask;
            if (r < bound) return r;
        }
    }

    std::uint64_t seed() const { return state_; }

private:
    static std::uint64_t scramble(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    std::uint64_t state_;
};

} // namespace pimhe
