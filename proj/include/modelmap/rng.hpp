#pragma once

#include <cstdint>
#include <random>

namespace modelmap {

// splitmix64 mixing step; used for deriving independent seeds from a base
// seed so that replicate r gets the same stream no matter how work is
// scheduled across threads.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) {
    return splitmix64(base ^ splitmix64(index + 1));
}

// Uniform double in [0,1) with 53 random bits. std::mt19937_64 is fully
// specified by the standard, and this mapping avoids the
// implementation-defined std::generate_canonical, so streams are identical
// across compilers.
inline double uniform01(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace modelmap
