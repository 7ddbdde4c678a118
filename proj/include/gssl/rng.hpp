#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace gssl {

// Deterministic RNG with hand-rolled distributions. std::shuffle and the standard
// distributions are not bit-stable across library implementations, and split/kfold
// reproducibility is a hard contract, so everything here is spelled out.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(splitmix64_scramble(seed)) {}

    static std::uint64_t splitmix64_scramble(std::uint64_t x) {
        x += 0x9e3779b97f4a7c15ULL;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    }

    // Derive an independent stream seed from a base seed and stream tags.
    static std::uint64_t derive(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                                std::uint64_t c = 0) {
        std::uint64_t x = splitmix64_scramble(seed);
        x = splitmix64_scramble(x ^ (a * 0x9e3779b97f4a7c15ULL));
        x = splitmix64_scramble(x ^ (b * 0xd1b54a32d192ed03ULL));
        x = splitmix64_scramble(x ^ (c * 0x8cb92ba72f3d8dd7ULL));
        return x;
    }

    std::uint64_t next_u64() {
        // xoshiro-free: iterate splitmix64, which is plenty for sampling plans.
        state_ += 0x9e3779b97f4a7c15ULL;
        std::uint64_t z = state_;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1) with 53 bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Unbiased integer in [0, n) by rejection.
    std::uint64_t below(std::uint64_t n) {
        if (n == 0) return 0;
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
        std::uint64_t v = next_u64();
        while (v >= limit) v = next_u64();
        return v % n;
    }

    // Box-Muller without a cached spare so call counts stay predictable.
    double gaussian() {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            const std::size_t j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    // k distinct indices from [0, n), in draw order.
    std::vector<std::size_t> sample_indices(std::size_t n, std::size_t k) {
        std::vector<std::size_t> pool(n);
        for (std::size_t i = 0; i < n; ++i) pool[i] = i;
        if (k > n) k = n;
        for (std::size_t i = 0; i < k; ++i) {
            const std::size_t j = i + static_cast<std::size_t>(below(n - i));
            std::swap(pool[i], pool[j]);
        }
        pool.resize(k);
        return pool;
    }

private:
    std::uint64_t state_;
};

// Shared rounding convention for fractional counts: round half up.
inline std::size_t round_count(double x) {
    if (x <= 0.0) return 0;
    return static_cast<std::size_t>(std::floor(x + 0.5));
}

}  // namespace gssl
