#pragma once

#include <cstdint>
#include <cmath>

namespace scbf {

/// Stateless counter-based random numbers: every draw is a pure function of
/// (seed, stream, index), so ensembles can be sampled in any order, in
/// parallel, and regenerated bit-identically.
namespace rng {

/// splitmix64 finalizer; the standard constants.
inline std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Combine (seed, stream, index) into one well-mixed 64-bit word.
inline std::uint64_t key(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
    return mix64(mix64(mix64(seed) ^ stream) ^ index);
}

/// Uniform in (0, 1); never returns 0 or 1 exactly.
inline double uniform(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
    const std::uint64_t bits = key(seed, stream, index);
    return (static_cast<double>(bits >> 11) + 0.5) * 0x1.0p-53;
}

/// Standard normal via Box-Muller; draw i of stream consumes two uniforms.
inline double normal(std::uint64_t seed, std::uint64_t stream, std::uint64_t index) {
    const double u1 = uniform(seed, stream, 2 * index);
    const double u2 = uniform(seed, stream, 2 * index + 1);
    constexpr double two_pi = 6.283185307179586476925286766559;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
}

} // namespace rng
} // namespace scbf
