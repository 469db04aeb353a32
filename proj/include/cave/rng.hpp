#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace cave
{

// SplitMix64 finalizer.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept
{
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Derives an independent stream seed from a root seed and a path of indices, so
// that e.g. (seed, iteration, particle) always yields the same generator no
// matter which worker draws from it.
constexpr std::uint64_t derive_seed(std::uint64_t root, std::initializer_list<std::uint64_t> path) noexcept
{
    std::uint64_t s = splitmix64(root);
    for (std::uint64_t p : path)
        s = splitmix64(s ^ splitmix64(p + 0x632BE59BD9B4E019ULL));
    return s;
}

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t root, std::initializer_list<std::uint64_t> path)
{
    return Rng{derive_seed(root, path)};
}

// Uniform in [0, 1) from the top 53 bits; identical across standard libraries.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

inline double uniform(Rng& rng, double lo, double hi) { return lo + (hi - lo) * uniform01(rng); }

} // namespace cave
