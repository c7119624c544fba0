#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace dygmamba {

inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Deterministic RNG. mt19937_64 is fully specified by the standard and the
// uniform helpers below avoid std::*_distribution, whose output is
// implementation-defined. Sub-streams are derived from the original seed so
// forked generators never depend on how much the parent was consumed.
class Rng {
public:
    explicit Rng(uint64_t seed) : seed_(seed), eng_(splitmix64(seed)) {}

    uint64_t bits() { return eng_(); }

    // [0, 1)
    double uniform() { return double(eng_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // [0, n), n > 0. Lemire multiply-shift; bias is unbiased via rejection.
    uint64_t uniform_index(uint64_t n) {
        uint64_t x = eng_();
        __uint128_t m = __uint128_t(x) * __uint128_t(n);
        uint64_t lo = uint64_t(m);
        if (lo < n) {
            uint64_t thresh = (0 - n) % n;
            while (lo < thresh) {
                x = eng_();
                m = __uint128_t(x) * __uint128_t(n);
                lo = uint64_t(m);
            }
        }
        return uint64_t(m >> 64);
    }

    Rng fork(uint64_t tag) const { return Rng(splitmix64(seed_ ^ (tag * 0xd1342543de82ef95ULL + 1))); }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (size_t i = v.size(); i > 1; --i) {
            size_t j = size_t(uniform_index(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    uint64_t seed() const { return seed_; }

private:
    uint64_t seed_;
    std::mt19937_64 eng_;
};

}  // namespace dygmamba
