#pragma once

#include <cstdint>
#include <random>

namespace fnb {

using Rng = std::mt19937_64;

// SplitMix64 finalizer.
std::uint64_t mix64(std::uint64_t x) noexcept;

// Derives an independent child seed. All fan-out in the project goes through
// this: per-run seed = derive_seed(master, run_index), and each consumer inside
// a run (init, shuffle, label noise, feature noise, ...) uses its own stream tag.
std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index) noexcept;

namespace stream {
inline constexpr std::uint64_t init = 1;
inline constexpr std::uint64_t shuffle = 2;
inline constexpr std::uint64_t label_noise = 3;
inline constexpr std::uint64_t feature_noise = 4;
inline constexpr std::uint64_t dataset = 5;
inline constexpr std::uint64_t split = 6;
inline constexpr std::uint64_t probe = 7;
} // namespace stream

} // namespace fnb
