#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

namespace ssep {

inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Stream key for (master seed, replica, purpose). Pure function, so replicas
// can be scheduled on any worker.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t replica,
                                 std::string_view tag) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : tag) h = (h ^ c) * 0x100000001b3ULL;
    return mix64(mix64(mix64(master) ^ replica) ^ h);
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t bits() { return eng_(); }

    // [0,1) with 53 random bits.
    double uniform() { return double(eng_() >> 11) * 0x1.0p-53; }

    // Uniform integer in [0, n) by multiply-high; bias below 2^-64 * n.
    std::uint64_t below(std::uint64_t n) {
        return std::uint64_t((static_cast<unsigned __int128>(eng_()) * n) >> 64);
    }

    double exponential(double rate) { return -std::log1p(-uniform()) / rate; }

    bool bernoulli(double p) { return uniform() < p; }

    double normal() { return std::normal_distribution<double>()(eng_); }

    std::mt19937_64& engine() { return eng_; }

private:
    std::mt19937_64 eng_;
};

}  // namespace ssep
