#pragma once

#include <cstdint>
#include <cmath>
#include <vector>

namespace volumetrack {

inline std::uint64_t mix64(std::uint64_t x) {
    // splitmix64 finalizer
    x ^= x >> 30;
    x *= 0xbf58476d1ce4e5b9ULL;
    x ^= x >> 27;
    x *= 0x94d049bb133111ebULL;
    x ^= x >> 31;
    return x;
}

constexpr std::uint64_t kGolden64 = 0x9e3779b97f4a7c15ULL;

// Sequential splitmix64 generator. Used wherever a plain seeded stream is
// enough (training shuffles, test data). Not std::mt19937 because the
// distributions we need must be bit-stable across standard libraries.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next_u64() {
        state_ += kGolden64;
        return mix64(state_);
    }

    // uniform in [0, 1)
    double uniform01() { return double(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // unbiased integer in [0, n)
    std::uint32_t below(std::uint32_t n) {
        if (n <= 1) return 0;
        const std::uint64_t limit = ~std::uint64_t{0} - ~std::uint64_t{0} % n;
        std::uint64_t x;
        do { x = next_u64(); } while (x >= limit);
        return std::uint32_t(x % n);
    }

    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        // Box-Muller; +1 on the mantissa keeps log() away from zero.
        const double u1 = double((next_u64() >> 11) + 1) * 0x1.0p-53;
        const double u2 = uniform01();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        has_spare_ = true;
        return r * std::cos(a);
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = below(std::uint32_t(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::uint64_t state_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

// Counter-based stream: a pure function of (seed, a, b, c) plus a draw
// counter. Two streams with the same key always produce the same sequence,
// which is what makes scene generation reproducible per (seed, frame,
// primitive) regardless of evaluation order.
class CounterRng {
public:
    explicit CounterRng(std::uint64_t seed, std::uint64_t a = 0, std::uint64_t b = 0,
                        std::uint64_t c = 0) {
        std::uint64_t k = mix64(seed + kGolden64);
        k = mix64(k ^ (a + kGolden64));
        k = mix64(k ^ (b + kGolden64));
        key_ = mix64(k ^ (c + kGolden64));
    }

    std::uint64_t next_u64() { return mix64(key_ + kGolden64 * ++counter_); }

    double uniform01() { return double(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    double normal() {
        const double u1 = double((next_u64() >> 11) + 1) * 0x1.0p-53;
        const double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) *
               std::cos(6.283185307179586476925286766559 * u2);
    }

private:
    std::uint64_t key_ = 0;
    std::uint64_t counter_ = 0;
};

} // namespace volumetrack
