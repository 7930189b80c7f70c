// random.hpp — Per-task random streams

#pragma once

#include <cstdint>
#include <random>

namespace btc {

// splitmix64 finalizer; spreads nearby seeds (master + index) across the
// mt19937_64 state space.
constexpr std::uint64_t mix_seed(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

using Rng = std::mt19937_64;

/// Stream for task `index` of a run seeded with `master`. Depends only on
/// the pair, never on scheduling order.
inline Rng task_rng(std::uint64_t master, std::uint64_t index = 0) {
    return Rng(mix_seed(master + index));
}

} // namespace btc
