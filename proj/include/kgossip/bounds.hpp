#pragma once

#include <cmath>
#include <cstdint>

namespace kgossip {

// Logarithms are base 2; integer round budgets take the ceiling.

inline double log2n(double x) { return std::log2(x); }

/// Smallest e with 2^e >= x, for x >= 1.
inline int ceil_log2(std::uint64_t x) {
    int e = 0;
    while ((std::uint64_t{1} << e) < x) ++e;
    return e;
}

/// Largest e with 2^e <= x, for x >= 1.
inline int floor_log2(std::uint64_t x) {
    int e = -1;
    while (x) {
        x >>= 1;
        ++e;
    }
    return e;
}

inline long long ceil_to_ll(double x) {
    // Guard against 12.000000000001 from rounding noise.
    const double r = std::round(x);
    if (std::fabs(x - r) < 1e-9) return static_cast<long long>(r);
    return static_cast<long long>(std::ceil(x));
}

inline long long floor_to_ll(double x) {
    const double r = std::round(x);
    if (std::fabs(x - r) < 1e-9) return static_cast<long long>(r);
    return static_cast<long long>(std::floor(x));
}

}  // namespace kgossip
