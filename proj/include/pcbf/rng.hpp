#pragma once

#include <cstdint>
#include <random>

namespace pcbf {

/// Named sub-streams of a trial. Each (master, trial, step, stream) key
/// maps to an independent generator seed.
enum class Stream : std::uint64_t {
    InitialState = 1,
    Measurement = 2,
    FilterParticles = 3,
    VerifyParticles = 4,
    ProcessNoise = 5,
    Oracle = 6,
};

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Derives a child seed by hashing the parent with a key. Chaining calls
/// gives a splittable tree of reproducible streams.
constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t key) noexcept {
    return splitmix64(parent ^ splitmix64(key + 0x632be59bd9b4e019ULL));
}

constexpr std::uint64_t trial_seed(std::uint64_t master, std::uint64_t trial) noexcept {
    return derive_seed(master, trial);
}

constexpr std::uint64_t step_seed(std::uint64_t master, std::uint64_t trial, std::uint64_t step,
                                  Stream stream) noexcept {
    return derive_seed(derive_seed(trial_seed(master, trial), step),
                       static_cast<std::uint64_t>(stream));
}

using Rng = std::mt19937_64;

} // namespace pcbf
