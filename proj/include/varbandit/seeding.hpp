#pragma once

#include <cstdint>

namespace varbandit {

/// SplitMix64 finalizer (Steele, Lea & Flood constants 0x9e3779b97f4a7c15,
/// 0xbf58476d1ce4e5b9, 0x94d049bb133111eb). A bijection on 64-bit words.
[[nodiscard]] constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Folds `value` into `seed`; chaining this gives a seed per tuple.
[[nodiscard]] constexpr std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t value) noexcept {
    return splitmix64(seed ^ splitmix64(value + 0x632be59bd9b4e019ULL));
}

/// Seed for the environment of one replication. Policies never feed into it,
/// so every policy in a replication sees the same rewards.
[[nodiscard]] constexpr std::uint64_t environment_seed(std::uint64_t base_seed,
                                                       std::uint64_t replication) noexcept {
    return mix_seed(mix_seed(base_seed, 0x454e56ULL), replication);
}

/// Seed for one arm's reward tape within a replication.
[[nodiscard]] constexpr std::uint64_t arm_seed(std::uint64_t env_seed, std::uint64_t arm) noexcept {
    return mix_seed(env_seed, arm + 1);
}

/// Seed for a policy's own randomness within a replication.
[[nodiscard]] constexpr std::uint64_t derive_seed(std::uint64_t base_seed, std::uint64_t replication,
                                                  std::uint64_t policy_id) noexcept {
    return mix_seed(mix_seed(mix_seed(base_seed, 0x504f4cULL), replication), policy_id);
}

} // namespace varbandit
