#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace dtuap {

// Deterministic RNG for all sampling in the library. Wraps std::mt19937_64
// (whose output sequence is pinned by the standard) and hand-rolls the
// distributions, because std::uniform_int_distribution and friends are not
// specified bit-for-bit across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

    std::uint64_t seed() const { return seed_; }

    std::uint64_t next_u64() { return engine_(); }

    // Unbiased integer in [0, bound) via rejection sampling. bound > 0.
    std::uint32_t uniform_u32(std::uint32_t bound) {
        const std::uint64_t span = 0x100000000ull - (0x100000000ull % bound);
        for (;;) {
            std::uint64_t v = engine_() >> 32;
            if (v < span) return static_cast<std::uint32_t>(v % bound);
        }
    }

    // Uniform in [0, 1) with 24 bits of mantissa.
    float uniform01() {
        return static_cast<float>(engine_() >> 40) * (1.0f / 16777216.0f);
    }

    float uniform(float lo, float hi) { return lo + (hi - lo) * uniform01(); }

    // Box-Muller; consumes two uniforms per pair, caches the spare.
    float normal(float mean = 0.0f, float sd = 1.0f) {
        if (has_spare_) {
            has_spare_ = false;
            return mean + sd * spare_;
        }
        float u1, u2;
        do {
            u1 = uniform01();
        } while (u1 <= 1e-12f);
        u2 = uniform01();
        const float r = std::sqrt(-2.0f * std::log(u1));
        const float theta = 6.283185307179586f * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return mean + sd * r * std::cos(theta);
    }

    // Independent child stream; a pure function of (parent seed, stream id),
    // so consumers can rebuild the stream for iteration t without replaying
    // iterations 0..t-1.
    Rng derive(std::uint64_t stream) const {
        return Rng(splitmix(seed_ + 0x9E3779B97F4A7C15ull * (stream + 1)));
    }

    static std::uint64_t splitmix(std::uint64_t x) {
        x += 0x9E3779B97F4A7C15ull;
        x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
        x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
        return x ^ (x >> 31);
    }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
    bool has_spare_ = false;
    float spare_ = 0.0f;
};

} // namespace dtuap
