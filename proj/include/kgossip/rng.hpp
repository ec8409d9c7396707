#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <string_view>
#include <utility>
#include <vector>

namespace kgossip {

// Keyed random streams. Every consumer derives its own stream from the run
// seed plus a label and up to three integer coordinates (round, endpoint,
// endpoint), so adding or removing a consumer never shifts another one.

constexpr std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

constexpr std::uint64_t hash_label(std::string_view label) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : label) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

constexpr std::uint64_t derive_key(std::uint64_t seed, std::string_view label,
                                   std::uint64_t a = 0, std::uint64_t b = 0,
                                   std::uint64_t c = 0) {
    std::uint64_t h = mix64(seed ^ 0x6a09e667f3bcc909ULL);
    h = mix64(h ^ hash_label(label));
    h = mix64(h ^ (a + 0x9e3779b97f4a7c15ULL));
    h = mix64(h ^ (b + 0x3c6ef372fe94f82bULL));
    h = mix64(h ^ (c + 0xa54ff53a5f1d36f1ULL));
    return h;
}

/// SplitMix64 stream. Satisfies UniformRandomBitGenerator; the bounded and
/// real-valued helpers below are used instead of <random> distributions so
/// traces are identical across standard library implementations.
class Rng {
public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t key = 0) : state_(key) {}

    static Rng derive(std::uint64_t seed, std::string_view label, std::uint64_t a = 0,
                      std::uint64_t b = 0, std::uint64_t c = 0) {
        return Rng(derive_key(seed, label, a, b, c));
    }

    /// Child stream keyed off this stream's next output.
    Rng split(std::string_view label, std::uint64_t a = 0) {
        return Rng(derive_key(next(), label, a));
    }

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type next() {
        state_ += 0x9e3779b97f4a7c15ULL;
        return mix64(state_);
    }
    result_type operator()() { return next(); }

    /// Uniform integer in [0, bound). bound must be positive.
    std::uint64_t uniform(std::uint64_t bound) {
        // Lemire's multiply-shift with rejection.
        unsigned __int128 m = static_cast<unsigned __int128>(next()) * bound;
        auto low = static_cast<std::uint64_t>(m);
        if (low < bound) {
            const std::uint64_t threshold = (0 - bound) % bound;
            while (low < threshold) {
                m = static_cast<unsigned __int128>(next()) * bound;
                low = static_cast<std::uint64_t>(m);
            }
        }
        return static_cast<std::uint64_t>(m >> 64);
    }

    int uniform_int(int bound) { return static_cast<int>(uniform(static_cast<std::uint64_t>(bound))); }

    /// Uniform double in [0, 1) with 53 bits of precision.
    double real() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    bool bernoulli(double p) { return real() < p; }

    bool bit() { return next() >> 63; }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            auto j = static_cast<std::size_t>(uniform(i));
            std::swap(v[i - 1], v[j]);
        }
    }

    /// `count` distinct values from [0, population), uniformly over all
    /// count-subsets, returned sorted ascending.
    std::vector<int> sample_without_replacement(int population, int count) {
        std::vector<int> pool(static_cast<std::size_t>(population));
        for (int i = 0; i < population; ++i) pool[static_cast<std::size_t>(i)] = i;
        for (int i = 0; i < count; ++i) {
            auto j = i + static_cast<int>(uniform(static_cast<std::uint64_t>(population - i)));
            std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
        }
        pool.resize(static_cast<std::size_t>(count));
        std::sort(pool.begin(), pool.end());
        return pool;
    }

private:
    std::uint64_t state_;
};

}  // namespace kgossip
