#pragma once

#include <cstdint>
#include <random>

namespace clocksync {

using Rng = std::mt19937_64;

/// Seed of the k-th replication of a batch run from a master seed.
constexpr std::uint64_t replication_seed(std::uint64_t master, std::uint64_t k) { return master ^ k; }

/// SplitMix64 finalizer; used to derive independent sub-stream seeds inside one run.
constexpr std::uint64_t mix_seed(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Seed of a named sub-stream (clock of node i, delays, MAC, ...) of a run.
constexpr std::uint64_t stream_seed(std::uint64_t master, std::uint64_t stream) {
    return mix_seed(master ^ mix_seed(stream));
}

/// Uniform draw in the half-open interval (0, 1].
inline double uniform_open0(Rng& rng) {
    return 1.0 - std::generate_canonical<double, 53>(rng);
}

}  // namespace clocksync
