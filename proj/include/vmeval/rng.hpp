#pragma once

// Counter-based random stream keyed by (seed, stream tag, index).
//
// Output word i of a stream is splitmix64(key + (i + 1) * golden), so any
// word can be computed without touching the others and two streams with
// different keys never share state. Integer and real sampling use only
// integer arithmetic and exact power-of-two scaling, so results are the
// same on every platform and standard library.

#include <cstdint>
#include <string_view>
#include <utility>
#include <vector>

#include "error.hpp"

namespace vmeval {

inline constexpr std::uint64_t splitmix64(std::uint64_t z) noexcept {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// FNV-1a, used to turn stream tags into key material.
inline constexpr std::uint64_t fnv1a(std::string_view s) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

class Rng {
public:
    explicit constexpr Rng(std::uint64_t key) noexcept : key_(key) {}

    constexpr Rng(std::uint64_t seed, std::string_view tag, std::uint64_t index = 0) noexcept
        : key_(derive(derive(splitmix64(seed), fnv1a(tag)), index)) {}

    constexpr std::uint64_t key() const noexcept { return key_; }
    constexpr std::uint64_t position() const noexcept { return counter_; }

    constexpr std::uint64_t next_u64() noexcept {
        ++counter_;
        return splitmix64(key_ + counter_ * 0x9e3779b97f4a7c15ULL);
    }

    /// Independent child stream; does not advance this one.
    constexpr Rng split(std::string_view tag, std::uint64_t index = 0) const noexcept {
        return Rng(derive(derive(key_, fnv1a(tag)), index));
    }

    /// Uniform integer in [0, bound). Rejection sampling, no modulo bias.
    std::uint64_t below(std::uint64_t bound) {
        if (bound == 0) throw ArgumentError("Rng::below: bound must be positive");
        const std::uint64_t threshold = (std::uint64_t{0} - bound) % bound;
        for (;;) {
            std::uint64_t v = next_u64();
            if (v >= threshold) return v % bound;
        }
    }

    /// Uniform integer in [lo, hi].
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        if (hi < lo) throw ArgumentError("Rng::uniform_int: empty range");
        const auto span = static_cast<std::uint64_t>(hi - lo) + 1;
        if (span == 0) return static_cast<std::int64_t>(next_u64());
        return lo + static_cast<std::int64_t>(below(span));
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform01() noexcept {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform_real(double lo, double hi) noexcept { return lo + (hi - lo) * uniform01(); }

    bool bernoulli(double p) noexcept { return uniform01() < p; }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            auto j = static_cast<std::size_t>(below(i));
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    static constexpr std::uint64_t derive(std::uint64_t a, std::uint64_t b) noexcept {
        return splitmix64(a ^ splitmix64(b + 0x632be59bd9b4e019ULL));
    }

    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

} // namespace vmeval
