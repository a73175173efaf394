#pragma once

#include <bit>
#include <cstdint>
#include <initializer_list>

namespace h2ad {

constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Order-sensitive hash of a master seed and integer coordinates.
inline std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> coords) {
    std::uint64_t h = splitmix64(master);
    for (std::uint64_t c : coords) h = splitmix64(h ^ splitmix64(c));
    return h;
}

/// Seed for one Monte Carlo trial at (snr_db, H, trial_id).
inline std::uint64_t trial_seed(std::uint64_t master, double snr_db, int snapshots, std::uint64_t trial_id) {
    return derive_seed(master, {std::bit_cast<std::uint64_t>(snr_db + 0.0), static_cast<std::uint64_t>(snapshots),
                                trial_id});
}

}  // namespace h2ad
