#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace restore {

/// Error raised when an input document violates the network or scenario schema.
class SchemaError : public std::runtime_error {
public:
    explicit SchemaError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Error raised when the model or controller reaches an inconsistent state.
class ModelError : public std::runtime_error {
public:
    explicit ModelError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Deterministic RNG with platform-independent integer/real mappings.
/// std::uniform_* distributions are not portable across standard libraries,
/// so the mappings are done by hand.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed ? seed : 0x9e3779b97f4a7c15ull) {}

    std::uint64_t next_u64() {
        // splitmix64
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    /// Uniform integer in [lo, hi] inclusive.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        if (hi < lo) throw ModelError("uniform_int: empty range");
        std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
        return lo + static_cast<std::int64_t>(next_u64() % span);
    }

    /// Uniform real in [0, 1).
    double uniform01() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform real in [lo, hi).
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    /// Fork a decorrelated child stream (for per-trial isolation).
    Rng fork(std::uint64_t salt) {
        return Rng(next_u64() ^ (salt * 0xda942042e4dd58b5ull));
    }

private:
    std::uint64_t state_;
};

}  // namespace restore
