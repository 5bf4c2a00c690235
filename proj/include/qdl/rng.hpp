#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace qdl {

// splitmix64; used to derive independent substream seeds from a master seed.
inline std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
    return mix_seed(master ^ mix_seed(stream + 1));
}

// Deterministic random source. mt19937_64 output is pinned by the standard
// and the uniform/normal mappings are written out explicitly, so identical
// seeds give identical streams on every platform; std::*_distribution would
// not guarantee that.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t raw() { return gen_(); }

    // uniform on [0, 1)
    double uniform01() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Box-Muller without caching the spare, so each draw consumes exactly two
    // uniforms and the stream layout stays obvious.
    double normal() {
        double u1 = uniform01();
        while (u1 == 0.0) u1 = uniform01();
        const double u2 = uniform01();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
    }

    double lognormal(double sigma) { return std::exp(sigma * normal()); }

    bool bernoulli(double p) { return uniform01() < p; }

    int uniform_int(int lo, int hi) { // inclusive bounds
        return lo + static_cast<int>(uniform01() * (hi - lo + 1));
    }

private:
    std::mt19937_64 gen_;
};

} // namespace qdl
