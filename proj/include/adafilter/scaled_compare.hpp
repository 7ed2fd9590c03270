#pragma once

#include <cstdint>

namespace adafilter {

// Sign of (a * m) - (b * k), evaluated exactly for finite a, b >= 0.
//
// Thresholds in the adaptive procedures are rationals k/m times alpha; all
// comparisons against them go through this so that a threshold never
// compares differently depending on how its quotient happened to round.
int compare_scaled(double a, std::uint64_t m, double b, std::uint64_t k) noexcept;

// a <= b * k / m
inline bool at_most_fraction(double a, double b, std::uint64_t k, std::uint64_t m) noexcept {
    return compare_scaled(a, m, b, k) <= 0;
}

// Smallest double that is >= b * k / m.
double fraction_ceil(double b, std::uint64_t k, std::uint64_t m) noexcept;

}  // namespace adafilter
