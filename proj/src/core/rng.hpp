#pragma once

#include <cstdint>
#include <random>

namespace rblab {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Derives an independent child seed from a parent seed and a stream label.
/// Runs use derive_seed(master_seed ^ run_index, purpose); nesting is allowed.
inline std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t label)
{
    return splitmix64(splitmix64(parent) ^ splitmix64(label + 0x632be59bd9b4e019ULL));
}

inline Rng make_rng(std::uint64_t seed) { return Rng(splitmix64(seed)); }

// Purposes for derive_seed; fixed values keep old result files replayable.
namespace stream {
inline constexpr std::uint64_t true_model = 1;
inline constexpr std::uint64_t environment = 2;
inline constexpr std::uint64_t learner = 3;
inline constexpr std::uint64_t baseline = 4;
inline constexpr std::uint64_t resample = 5;
inline constexpr std::uint64_t initial_state = 6;
}  // namespace stream

}  // namespace rblab
