#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace cumi {

// Seeded random source built on std::mt19937_64 (whose output sequence is
// fixed by the standard) with hand-rolled transforms, so that streams are
// identical across standard-library implementations. std::*_distribution is
// implementation-defined and must not appear anywhere in the artifact.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1) with 53 bits of mantissa.
    double uniform01() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform01();
    }

    // Box-Muller; the second deviate is cached.
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        double u1 = uniform01();
        if (u1 <= 0.0) u1 = 0x1.0p-53;
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(theta);
        has_spare_ = true;
        return r * std::cos(theta);
    }

    // Uniform integer in [lo, hi], inclusive, bias-free via rejection.
    std::uint64_t uniform_index(std::uint64_t span) {
        // span must be >= 1; returns a value in [0, span).
        const std::uint64_t limit = (UINT64_MAX / span) * span;
        std::uint64_t x = next_u64();
        while (x >= limit) x = next_u64();
        return x % span;
    }

    int uniform_int(int lo, int hi) {
        return lo + static_cast<int>(uniform_index(
                        static_cast<std::uint64_t>(hi - lo) + 1));
    }

    // Fisher-Yates.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(uniform_index(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace cumi
