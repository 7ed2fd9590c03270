#include "adafilter/scaled_compare.hpp"

#include <bit>
#include <cmath>
#include <limits>

namespace adafilter {
namespace {

using u128 = unsigned __int128;

struct Scaled {
    u128 mantissa = 0;  // zero means the value is zero
    int exponent = 0;   // value = mantissa * 2^exponent
};

Scaled scale(double x, std::uint64_t factor) noexcept {
    if (x == 0.0 || factor == 0) return {};
    int exp = 0;
    const double frac = std::frexp(x, &exp);  // x = frac * 2^exp, frac in [0.5, 1)
    const auto mant = static_cast<std::uint64_t>(std::ldexp(frac, 53));
    return {static_cast<u128>(mant) * factor, exp - 53};
}

int bit_length(u128 v) noexcept {
    const auto hi = static_cast<std::uint64_t>(v >> 64);
    if (hi != 0) return 128 - std::countl_zero(hi);
    return 64 - std::countl_zero(static_cast<std::uint64_t>(v));
}

}  // namespace

int compare_scaled(double a, std::uint64_t m, double b, std::uint64_t k) noexcept {
    const Scaled lhs = scale(a, m);
    const Scaled rhs = scale(b, k);
    if (lhs.mantissa == 0 || rhs.mantissa == 0) {
        return (lhs.mantissa != 0) - (rhs.mantissa != 0);
    }
    const int lhs_top = bit_length(lhs.mantissa) + lhs.exponent;
    const int rhs_top = bit_length(rhs.mantissa) + rhs.exponent;
    if (lhs_top != rhs_top) return lhs_top < rhs_top ? -1 : 1;

    // Same magnitude: align exponents. The shift is below 128 because both
    // mantissas have the same leading-bit position.
    u128 x = lhs.mantissa;
    u128 y = rhs.mantissa;
    if (lhs.exponent > rhs.exponent) {
        x <<= (lhs.exponent - rhs.exponent);
    } else if (rhs.exponent > lhs.exponent) {
        y <<= (rhs.exponent - lhs.exponent);
    }
    return (x > y) - (x < y);
}

double fraction_ceil(double b, std::uint64_t k, std::uint64_t m) noexcept {
    if (k == 0) return 0.0;
    double g = b * static_cast<double>(k) / static_cast<double>(m);
    constexpr double inf = std::numeric_limits<double>::infinity();
    while (compare_scaled(g, m, b, k) < 0) g = std::nextafter(g, inf);
    for (;;) {
        const double below = std::nextafter(g, 0.0);
        if (compare_scaled(below, m, b, k) < 0) break;
        g = below;
    }
    return g;
}

}  // namespace adafilter
