#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

namespace rieszboost {

/// splitmix64 finalizer; used to derive decorrelated sub-stream seeds.
inline std::uint64_t mix64(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Derive the seed for a named sub-stream (data draw, split, folds, ...)
/// so streams sharing a base seed stay decorrelated.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream_tag) {
    return mix64(seed ^ mix64(stream_tag));
}

/// Deterministic random generator. mt19937_64 seeding is fully specified by
/// the standard, and the distributions below are hand-rolled because the
/// std:: distribution algorithms are implementation-defined; this keeps every
/// seeded result bit-identical across platforms.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    /// Uniform on [0, 1) with 53 random bits.
    double uniform01() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) {
        return lo + (hi - lo) * uniform01();
    }

    /// Standard normal via the Box-Muller cosine branch.
    double normal() {
        const double u1 = 1.0 - uniform01();  // (0, 1]; avoids log(0)
        const double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    double normal(double mean, double sd) {
        return mean + sd * normal();
    }

    bool bernoulli(double p) {
        return uniform01() < p;
    }

    /// Uniform integer in [0, n). Bias is below 2^-53 per draw.
    std::size_t uniform_index(std::size_t n) {
        const auto k = static_cast<std::size_t>(uniform01() * static_cast<double>(n));
        return k < n ? k : n - 1;
    }

    /// Fisher-Yates shuffle.
    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::swap(v[i - 1], v[uniform_index(i)]);
        }
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace rieszboost
