#pragma once

#include <cmath>
#include <cstdint>
#include <random>

#include "scanviz/error.hpp"

namespace scanviz {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

// mt19937_64 with hand-rolled draw helpers. The standard distributions are
// implementation-defined, so sequences would differ between libstdc++ and
// libc++; these helpers keep every output reproducible from the seed alone.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(splitmix64(seed)) {}

    std::uint64_t next_u64() { return gen_(); }

    // Uniform integer in [lo, hi], inclusive.
    int uniform_int(int lo, int hi) {
        if (lo > hi) throw ParamError("uniform_int: lo > hi");
        std::uint64_t span = static_cast<std::uint64_t>(hi) - static_cast<std::uint64_t>(lo) + 1;
        return lo + static_cast<int>(next_u64() % span);
    }

    double uniform01() {
        return static_cast<double>(next_u64() >> 11) * (1.0 / 9007199254740992.0);
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Box-Muller; one value per call (the pair's partner is discarded to keep
    // the call/draw correspondence simple).
    double normal(double mean, double stddev) {
        double u1 = uniform01();
        double u2 = uniform01();
        while (u1 <= 0.0) u1 = uniform01();
        double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
        return mean + stddev * z;
    }

    // Derive an independent stream for a sub-purpose.
    std::uint64_t fork_seed(std::uint64_t stream_id) {
        return splitmix64(next_u64() ^ splitmix64(stream_id));
    }

private:
    std::mt19937_64 gen_;
};

}  // namespace scanviz
