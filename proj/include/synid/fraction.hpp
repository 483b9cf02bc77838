#pragma once

#include <cstdint>
#include <numeric>
#include <string>

#include "synid/error.hpp"
#include "synid/numio.hpp"

namespace synid {

// Exact ratio of pair counts. Metric fractions are kept as integers so the
// brute-force oracle comparisons in the tests are exact, and only formatted
// to decimals at the reporting boundary.
struct Fraction {
    std::int64_t num = 0;
    std::int64_t den = 1;

    Fraction() = default;
    Fraction(std::int64_t n, std::int64_t d) : num(n), den(d) {
        if (den == 0) throw NumericError("fraction: zero denominator");
        if (den < 0) {
            num = -num;
            den = -den;
        }
        const std::int64_t g = std::gcd(num < 0 ? -num : num, den);
        if (g > 1) {
            num /= g;
            den /= g;
        }
    }

    double value() const { return static_cast<double>(num) / static_cast<double>(den); }

    // Percentage with three decimals (Table-style formatting).
    std::string percent_string() const { return format_fixed(100.0 * value(), 3); }

    // Arithmetic reduces in 128-bit first; pair counts can push the raw
    // cross products past 64 bits.
    friend Fraction operator+(const Fraction& a, const Fraction& b) {
        return make_reduced(static_cast<__int128>(a.num) * b.den +
                                static_cast<__int128>(b.num) * a.den,
                            static_cast<__int128>(a.den) * b.den);
    }
    friend Fraction operator-(const Fraction& a, const Fraction& b) {
        return make_reduced(static_cast<__int128>(a.num) * b.den -
                                static_cast<__int128>(b.num) * a.den,
                            static_cast<__int128>(a.den) * b.den);
    }
    friend Fraction operator*(const Fraction& a, const Fraction& b) {
        return make_reduced(static_cast<__int128>(a.num) * b.num,
                            static_cast<__int128>(a.den) * b.den);
    }

    friend bool operator==(const Fraction& a, const Fraction& b) {
        return a.num == b.num && a.den == b.den;
    }
    friend bool operator<(const Fraction& a, const Fraction& b) {
        return static_cast<__int128>(a.num) * b.den < static_cast<__int128>(b.num) * a.den;
    }
    friend bool operator<=(const Fraction& a, const Fraction& b) {
        return static_cast<__int128>(a.num) * b.den <= static_cast<__int128>(b.num) * a.den;
    }
    friend bool operator>(const Fraction& a, const Fraction& b) { return b < a; }
    friend bool operator>=(const Fraction& a, const Fraction& b) { return b <= a; }

    Fraction abs() const { return num < 0 ? Fraction(-num, den) : *this; }

private:
    static Fraction make_reduced(__int128 n, __int128 d) {
        if (d < 0) {
            n = -n;
            d = -d;
        }
        __int128 an = n < 0 ? -n : n;
        __int128 g = d;
        while (an != 0) {
            const __int128 t = an;
            an = g % an;
            g = t;
        }
        if (g > 1) {
            n /= g;
            d /= g;
        }
        if (n > INT64_MAX || n < INT64_MIN || d > INT64_MAX)
            throw NumericError("fraction: overflow after reduction");
        Fraction f;
        f.num = static_cast<std::int64_t>(n);
        f.den = static_cast<std::int64_t>(d);
        return f;
    }
};

} // namespace synid
